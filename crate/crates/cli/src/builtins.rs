//! Catalogue printed by `--list-builtins`.

use serde_json::{json, Value};

fn param(name: &str, kind: &str, default: Value, doc: &str) -> Value {
    json!({ "name": name, "type": kind, "default": default, "doc": doc })
}

fn entry(kind: &str, doc: &str, params: Vec<Value>) -> Value {
    json!({ "kind": kind, "doc": doc, "parameters": params })
}

pub fn catalogue() -> Value {
    let req = Value::Null;
    let magnetic = vec![
        entry("none", "A = 0", vec![]),
        entry(
            "ex13",
            "A = s(-x2, x1, 0, ...)/|x|^2; trapping component vanishes identically",
            vec![param("strength", "number", json!(1.0), "s")],
        ),
        entry(
            "ex14",
            "A = s(-x2, x1, 0, ...)/(x1^2 + x2^2); singular on the x3 axis",
            vec![param("strength", "number", json!(1.0), "s")],
        ),
        entry(
            "ex14_family",
            "Biot-Savart potential of B(y) = h(y/|y|·ω)|y|^-α y/|y| (n = 3 only)",
            vec![
                param("alpha", "number", req.clone(), "decay exponent α"),
                param("omega", "array[3]", req.clone(), "axis ω"),
                param("profile", "table", json!({ "coefficients": [0.0, 1.0] }), "h(t) = Σ c_k t^k"),
            ],
        ),
        entry(
            "uniform",
            "symmetric gauge of a constant field along x3",
            vec![param("field", "number", json!(1.0), "field strength")],
        ),
        entry(
            "gaussian_vortex",
            "A = s e^{-|x|^2/w^2}(-x2, x1, 0, ...)",
            vec![
                param("strength", "number", req.clone(), "s"),
                param("width", "number", json!(1.0), "w > 0"),
            ],
        ),
    ];
    let electric = vec![
        entry("none", "V = 0", vec![]),
        entry(
            "coulomb",
            "V = s/|x|",
            vec![param("strength", "number", req.clone(), "s")],
        ),
        entry(
            "inverse_square",
            "V = s/|x|^2 (capped at 1/h^2 on the grid)",
            vec![param("strength", "number", req.clone(), "s")],
        ),
        entry(
            "gaussian",
            "V = a e^{-|x|^2/w^2}",
            vec![
                param("amplitude", "number", req.clone(), "a"),
                param("width", "number", json!(1.0), "w > 0"),
            ],
        ),
        entry(
            "screened",
            "V = s e^{-|x|}/<x>",
            vec![param("strength", "number", req.clone(), "s")],
        ),
    ];
    let center = param("center", "array[n]", json!(null), "defaults to the origin");
    let datum = vec![
        entry(
            "gaussian",
            "a e^{-|x-c|^2/w^2}",
            vec![
                param("width", "number", req.clone(), "w > 0"),
                param("amplitude", "number", json!(1.0), "a"),
                center.clone(),
            ],
        ),
        entry(
            "shell_bump",
            "a ψ((|x| - r)/w) with ψ(t) = e^{1 - 1/(1 - t^2)}",
            vec![
                param("radius", "number", req.clone(), "r >= 0"),
                param("width", "number", req.clone(), "w > 0"),
                param("amplitude", "number", json!(1.0), "a"),
            ],
        ),
        entry(
            "point_bump",
            "a ψ(|x - c|/w)",
            vec![
                param("width", "number", req.clone(), "w > 0"),
                param("amplitude", "number", json!(1.0), "a"),
                center,
            ],
        ),
    ];
    let lambda = |d: f64| param("lambda", "number", json!(d), "λ >= 0");
    let runs = vec![
        entry(
            "fields-check",
            "sample |B_tau| and ∂_r V at random points of a ball",
            vec![
                param("samples", "integer", json!(1000), ""),
                param("seed", "integer", json!(0), ""),
                param("radius", "number", json!(null), "defaults to the grid half-width"),
                param("differentiation", "string", json!("both"), "both | analytic | finite-difference"),
            ],
        ),
        entry("admissibility", "constants C1, C2, C3 and the verdict", vec![]),
        entry(
            "solve",
            "solve -Hu + (λ + iε)u = f; report estimate, resonance functionals, snapshot",
            vec![
                lambda(1.0),
                param("epsilon", "number", req.clone(), "non-zero; sign selects λ ± i|ε|"),
                param("datum", "table", json!({ "kind": "gaussian", "width": 1.0 }), "datum f"),
                param("M", "number", json!(null), "defaults to the admissibility optimum"),
                param("delta", "number", json!(null), "defaults to min(margin/4, 0.1)"),
                param("radii", "array", json!(null), "resonance radii, default 2, 4, ..., L"),
                param("snapshot", "boolean", json!(true), "write the solution snapshot"),
            ],
        ),
        entry(
            "verify-identity",
            "both sides of the multiplier identity on a manufactured or solved field",
            vec![
                lambda(0.0),
                param("epsilon", "number", json!(1.0), ""),
                param("datum", "table", req.clone(), "u when manufactured, else f"),
                param("manufactured", "boolean", json!(true), ""),
                param("M", "number", json!(null), "defaults to the admissibility optimum"),
                param("beta", "number", json!(morcam::multipliers::DEFAULT_BETA), "0 < β < (n-1)/(2n)"),
                param("radii", "array", json!(null), "multiplier scales, default L/8, L/4, L/2"),
                param("tolerance", "number", json!(null), "accuracy failure above this residual"),
            ],
        ),
        entry(
            "sweep",
            "estimate ratio across decreasing ε",
            vec![
                lambda(1.0),
                param("epsilons", "array", json!([1.0, 0.1, 0.01, 0.001]), ""),
                param("datum", "table", json!({ "kind": "gaussian", "width": 1.0 }), ""),
                param("M", "number", json!(null), ""),
                param("delta", "number", json!(null), ""),
                param(
                    "epsilon_min_factor",
                    "number",
                    json!(morcam::resolvent::EPSILON_MIN_FACTOR),
                    "warn below factor·4/L^2",
                ),
            ],
        ),
    ];
    json!({
        "magnetic": magnetic,
        "electric": electric,
        "datum": datum,
        "runs": runs,
    })
}

pub fn render_text(cat: &Value) -> String {
    let mut out = String::new();
    for (section, title) in [
        ("magnetic", "Magnetic potentials ([potential] magnetic)"),
        ("electric", "Electric potentials ([potential] electric)"),
        ("datum", "Data (run.datum)"),
        ("runs", "Run kinds ([run] kind)"),
    ] {
        out.push_str(title);
        out.push('\n');
        for e in cat[section].as_array().into_iter().flatten() {
            out.push_str(&format!("  {:<16} {}\n", e["kind"].as_str().unwrap_or(""), e["doc"].as_str().unwrap_or("")));
            for p in e["parameters"].as_array().into_iter().flatten() {
                let default = match &p["default"] {
                    Value::Null => "required or derived".to_string(),
                    v => format!("default {v}"),
                };
                out.push_str(&format!(
                    "      {:<20} {:<9} {default}\n",
                    p["name"].as_str().unwrap_or(""),
                    p["type"].as_str().unwrap_or("")
                ));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_the_examples() {
        let cat = catalogue();
        let kinds: Vec<&str> = cat["magnetic"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
        assert!(kinds.contains(&"ex13") && kinds.contains(&"ex14"));
        let text = render_text(&cat);
        assert!(text.contains("ex13") && text.contains("verify-identity"));
    }
}
