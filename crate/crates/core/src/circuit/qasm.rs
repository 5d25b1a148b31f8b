//! OpenQASM 3 export and the matching reader.
//!
//! `rxx`/`ryy` are declared as local gate definitions so the program only
//! depends on `stdgates.inc`. Angles are printed in shortest round-trip form.

use std::fmt::Write;

use super::{Gate, GateKind, QuantumCircuit, Section, NUM_QUBITS};
use crate::error::{Error, Result};

const QUBIT_NAMES: [&str; NUM_QUBITS] = ["d", "q", "c1", "c2"];

const HEADER: &str = "OPENQASM 3.0;
include \"stdgates.inc\";
gate rxx(theta) a, b { h a; h b; cx a, b; rz(theta) b; cx a, b; h a; h b; }
gate ryy(theta) a, b { rx(pi/2) a; rx(pi/2) b; cx a, b; rz(theta) b; cx a, b; rx(-pi/2) a; rx(-pi/2) b; }
qubit d;
qubit q;
qubit c1;
qubit c2;
bit md;
bit mq;
";

const MEASUREMENT: &str = "// measurement
h d;
md = measure d;
mq = measure q;
";

fn name(kind: GateKind) -> &'static str {
    match kind {
        GateKind::H => "h",
        GateKind::X => "x",
        GateKind::Cz => "cz",
        GateKind::Xx => "rxx",
        GateKind::Yy => "ryy",
        GateKind::Cp => "cp",
        GateKind::Rz => "rz",
    }
}

fn kind_of(name: &str) -> Option<GateKind> {
    Some(match name {
        "h" => GateKind::H,
        "x" => GateKind::X,
        "cz" => GateKind::Cz,
        "rxx" => GateKind::Xx,
        "ryy" => GateKind::Yy,
        "cp" => GateKind::Cp,
        "rz" => GateKind::Rz,
        _ => return None,
    })
}

fn gate_line(out: &mut String, g: &Gate) {
    out.push_str(name(g.kind()));
    if let Some(a) = g.angle() {
        write!(out, "({a:?})").expect("write to string");
    }
    let qubits: Vec<&str> = g.qubits().iter().map(|&q| QUBIT_NAMES[q]).collect();
    writeln!(out, " {};", qubits.join(", ")).expect("write to string");
}

/// Byte-stable program text: header, `// preparation`, `// charging`, then the
/// fixed measurement of `d` (after `h`) and `q`.
pub fn emit_qasm(circuit: &QuantumCircuit) -> String {
    let mut out = String::from(HEADER);
    for (title, gates) in [("preparation", circuit.preparation()), ("charging", circuit.charging())] {
        if gates.is_empty() {
            continue;
        }
        writeln!(out, "// {title}").expect("write to string");
        for g in gates {
            gate_line(&mut out, g);
        }
    }
    out.push_str(MEASUREMENT);
    out
}

fn parse_gate(stmt: &str, line: usize) -> Result<Gate> {
    let err = |msg: String| Error::Qasm { line, msg };
    let (head, args) = stmt.split_once(' ').ok_or_else(|| err(format!("malformed statement `{stmt}`")))?;
    let (gate_name, angle) = match head.split_once('(') {
        Some((n, rest)) => {
            let a = rest.strip_suffix(')').ok_or_else(|| err(format!("unclosed angle in `{head}`")))?;
            let value = a.parse::<f64>().map_err(|e| err(format!("bad angle `{a}`: {e}")))?;
            (n, Some(value))
        }
        None => (head, None),
    };
    let kind = kind_of(gate_name).ok_or_else(|| err(format!("unsupported gate `{gate_name}`")))?;
    let qubits = args
        .split(',')
        .map(|s| {
            let s = s.trim();
            QUBIT_NAMES.iter().position(|&n| n == s).ok_or_else(|| err(format!("unknown qubit `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Gate::new(kind, &qubits, angle).map_err(|e| err(e.to_string()))
}

/// Reads programs produced by [`emit_qasm`]. Declarations, gate definitions
/// and the measurement block are checked for shape and otherwise skipped.
pub fn parse_qasm(text: &str) -> Result<QuantumCircuit> {
    let mut circuit = QuantumCircuit::new();
    let mut section = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        match s {
            "" => continue,
            "// preparation" => {
                section = Some(Section::Preparation);
                continue;
            }
            "// charging" => {
                section = Some(Section::Charging);
                continue;
            }
            "// measurement" => break,
            _ => {}
        }
        if s.starts_with("//")
            || s.starts_with("OPENQASM")
            || s.starts_with("include")
            || s.starts_with("gate ")
            || s.starts_with("qubit ")
            || s.starts_with("bit ")
        {
            continue;
        }
        let stmt = s.strip_suffix(';').ok_or(Error::Qasm { line, msg: "missing `;`".into() })?;
        let target = section.ok_or(Error::Qasm { line, msg: "gate outside a section".into() })?;
        let gate = parse_gate(stmt, line)?;
        circuit.push(target, gate).map_err(|e| Error::Qasm { line, msg: e.to_string() })?;
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_ico_circuit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_circuit_has_no_gate_statements() {
        let text = emit_qasm(&QuantumCircuit::new());
        assert_eq!(text, format!("{HEADER}{MEASUREMENT}"));
        assert!(parse_qasm(&text).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let c = build_ico_circuit(rng.gen_range(-3.0..3.0), rng.gen_range(-50.0..50.0));
            let text = emit_qasm(&c);
            assert_eq!(parse_qasm(&text).unwrap(), c);
            assert_eq!(emit_qasm(&parse_qasm(&text).unwrap()), text);
        }
    }

    #[test]
    fn emitted_text_layout() {
        let text = emit_qasm(&build_ico_circuit(0.1 * std::f64::consts::PI, std::f64::consts::PI));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "OPENQASM 3.0;");
        let decl: Vec<&str> = lines.iter().filter(|l| l.starts_with("qubit ")).copied().collect();
        assert_eq!(decl, ["qubit d;", "qubit q;", "qubit c1;", "qubit c2;"]);
        let prep = lines.iter().position(|l| *l == "// preparation").unwrap();
        assert_eq!(&lines[prep + 1..prep + 4], ["h d;", "x c1;", "x c2;"]);
        assert!(text.contains("rxx(0.15707963267948966) q, c1;"));
        assert!(text.ends_with("// measurement\nh d;\nmd = measure d;\nmq = measure q;\n"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = format!("{HEADER}// charging\nfoo d;\n");
        assert!(matches!(parse_qasm(&bad), Err(Error::Qasm { line: 12, .. })));
        let bad = format!("{HEADER}// charging\ncz d, z;\n");
        assert!(parse_qasm(&bad).is_err());
        let bad = format!("{HEADER}h d;\n");
        assert!(parse_qasm(&bad).is_err());
        let bad = format!("{HEADER}// charging\nrz(abc) d;\n");
        assert!(parse_qasm(&bad).is_err());
    }
}
