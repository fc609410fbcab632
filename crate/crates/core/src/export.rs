//! JSON and CSV records. Exact values travel as `"numerator/denominator"`
//! strings so nothing is lost in transit.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dist::{Label, Pmf};
use crate::error::{Error, Result};
use crate::numerics::{AlphaParam, Exact, Mode, Scalar};
use crate::stirling::StirlingTable;
use crate::thermo::rate_function;

/// `"p/q"`, always with a denominator.
pub fn exact_string(x: &Exact) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"`, an integer, or a terminating decimal such as `-0.25`.
pub fn parse_exact(s: &str) -> Result<Exact> {
    let s = s.trim();
    let bad = || Error::Export(format!("not a rational: {s:?}"));
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
        let magnitude: num_bigint::BigInt = digits.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(num_bigint::BigInt::from(10), frac.len());
        let x = Exact::new(magnitude, scale);
        return Ok(if negative { -x } else { x });
    }
    match s.split_once('/') {
        Some((n, d)) => {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d: num_bigint::BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == 0.into() {
                return Err(bad());
            }
            Ok(Exact::new(n, d))
        }
        None => Ok(Exact::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn export_err(e: impl std::fmt::Display) -> Error {
    Error::Export(e.to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(export_err)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(export_err)
}

/// Rows of a header-first CSV document.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(export_err)?;
    }
    let bytes = w.into_inner().map_err(export_err)?;
    String::from_utf8(bytes).map_err(export_err)
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(export_err))
        .collect()
}

/// A probability mass as exported: a rational string or a float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Mass {
    Exact(String),
    Float(f64),
}

/// Serialized [`Pmf`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRecord {
    pub mode: Mode,
    pub support: Vec<Label>,
    pub mass: Vec<Mass>,
}

impl PmfRecord {
    pub fn from_pmf<S: Scalar>(pmf: &Pmf<S>) -> Self {
        let mass = pmf
            .masses()
            .iter()
            .map(|m| match S::MODE {
                Mode::Exact => Mass::Exact(exact_string(
                    &parse_exact(&m.to_string()).expect("rational display"),
                )),
                Mode::Float => Mass::Float(m.as_f64()),
            })
            .collect();
        PmfRecord {
            mode: S::MODE,
            support: pmf.support().to_vec(),
            mass,
        }
    }

    pub fn to_exact(&self) -> Result<Pmf<Exact>> {
        let mass = self
            .mass
            .iter()
            .map(|m| match m {
                Mass::Exact(s) => parse_exact(s),
                Mass::Float(_) => Err(Error::Export("float mass in an exact record".into())),
            })
            .collect::<Result<_>>()?;
        Pmf::new(self.support.clone(), mass)
    }

    pub fn to_float(&self) -> Result<Pmf<f64>> {
        let mass = self
            .mass
            .iter()
            .map(|m| match m {
                Mass::Float(x) => Ok(*x),
                Mass::Exact(s) => Ok(crate::numerics::exact_to_f64(&parse_exact(s)?)),
            })
            .collect::<Result<_>>()?;
        Pmf::new(self.support.clone(), mass)
    }

    /// Two-column CSV: `label,mass`.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row {
            label: String,
            mass: String,
        }
        let rows: Vec<Row> = self
            .support
            .iter()
            .zip(&self.mass)
            .map(|(l, m)| Row {
                label: label_string(l),
                mass: match m {
                    Mass::Exact(s) => s.clone(),
                    Mass::Float(x) => x.to_string(),
                },
            })
            .collect();
        to_csv(&rows)
    }
}

/// Compact text form of a label: `3`, `2+1+1` or `>30`.
pub fn label_string(label: &Label) -> String {
    match label {
        Label::Value(v) => v.to_string(),
        Label::Parts(p) => p.iter().map(usize::to_string).collect::<Vec<_>>().join("+"),
        Label::Tail { above } => format!(">{above}"),
    }
}

/// One exact triangle entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleEntry {
    pub n: usize,
    pub k: usize,
    pub numerator: String,
    pub denominator: String,
}

impl TriangleEntry {
    pub fn new(n: usize, k: usize, value: &Exact) -> Self {
        TriangleEntry {
            n,
            k,
            numerator: value.numer().to_string(),
            denominator: value.denom().to_string(),
        }
    }

    pub fn value(&self) -> Result<Exact> {
        parse_exact(&format!("{}/{}", self.numerator, self.denominator))
    }
}

/// Entries `1 ≤ k ≤ n ≤ n_max` of an exact triangle.
pub fn triangle_entries(rows: &[Vec<Exact>]) -> Vec<TriangleEntry> {
    rows.iter()
        .enumerate()
        .skip(1)
        .flat_map(|(n, row)| {
            row.iter()
                .enumerate()
                .skip(1)
                .map(move |(k, v)| TriangleEntry::new(n, k, v))
        })
        .collect()
}

/// Stirling triangle with its forest counts, as exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StirlingRecord {
    pub alpha: AlphaParam,
    pub n_max: usize,
    pub stirling: Vec<TriangleEntry>,
    pub forest_counts: Vec<TriangleEntry>,
}

impl StirlingRecord {
    pub fn from_table(table: &StirlingTable) -> Result<Self> {
        let alpha = table
            .alpha()
            .ok_or_else(|| Error::Export("only the Sibuya variant carries forest counts".into()))?
            .clone();
        let counts: Vec<Vec<Exact>> = (0..=table.n_max())
            .map(|n| table.forest_count_row(n).expect("Sibuya variant"))
            .collect();
        Ok(StirlingRecord {
            alpha,
            n_max: table.n_max(),
            stirling: triangle_entries(table.rows()),
            forest_counts: triangle_entries(&counts),
        })
    }
}

/// One point of a rate-function curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rho: f64,
    pub r: f64,
    pub f: f64,
}

/// Rate function on the grid `rhos × rs`.
pub fn rate_grid(alpha: &AlphaParam, rhos: &[f64], rs: &[f64]) -> Result<Vec<RatePoint>> {
    let mut out = Vec::with_capacity(rhos.len() * rs.len());
    for &rho in rhos {
        for &r in rs {
            out.push(RatePoint {
                rho,
                r,
                f: rate_function(alpha, rho, r)?,
            });
        }
    }
    Ok(out)
}

/// Envelope for a Monte Carlo result: what was run, with which randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest<T> {
    pub command: String,
    pub seed: u64,
    pub stream: u64,
    pub trials: u64,
    pub report: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{kn_pmf, marginal_pmf, occupancy_pmf, progeny_pmf};
    use crate::stirling::build_triangle;
    use crate::thermo::{classify_rescaled, solve_z_rho};

    fn a(p: u64, q: u64) -> AlphaParam {
        AlphaParam::new(p, q).unwrap()
    }

    #[test]
    fn rational_strings() {
        assert_eq!(exact_string(&Exact::from_integer(3.into())), "3/1");
        assert_eq!(exact_string(&Exact::new((-2).into(), 6.into())), "-1/3");
        assert_eq!(
            parse_exact(" 4/6 ").unwrap(),
            Exact::new(2.into(), 3.into())
        );
        assert_eq!(parse_exact("7").unwrap(), Exact::from_integer(7.into()));
        assert_eq!(parse_exact("0.25").unwrap(), Exact::new(1.into(), 4.into()));
        assert_eq!(
            parse_exact("-.5").unwrap(),
            Exact::new((-1).into(), 2.into())
        );
        assert_eq!(parse_exact("1.0").unwrap(), Exact::from_integer(1.into()));
        assert!(parse_exact("1.").is_err());
        assert!(parse_exact("1/0").is_err());
        assert!(parse_exact("x").is_err());
    }

    #[test]
    fn pmf_round_trips() {
        let exact = kn_pmf::<Exact>(&a(1, 2), 2).unwrap();
        let rec = PmfRecord::from_pmf(&exact);
        let json = to_json(&rec).unwrap();
        assert!(json.contains("\"1/3\"") && json.contains("\"2/3\""));
        let back: PmfRecord = from_json(&json).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.to_exact().unwrap(), exact);

        let float = progeny_pmf::<f64>(&a(2, 3), 20).unwrap();
        let rec = PmfRecord::from_pmf(&float);
        let back: PmfRecord = from_json(&to_json(&rec).unwrap()).unwrap();
        assert_eq!(back.to_float().unwrap(), float);
        assert!(rec
            .to_csv()
            .unwrap()
            .ends_with(&format!(">20,{}\n", float.masses()[20])));

        let marg = marginal_pmf(&a(1, 2), 4, 2).unwrap();
        assert_eq!(
            from_json::<PmfRecord>(&to_json(&PmfRecord::from_pmf(&marg)).unwrap())
                .unwrap()
                .to_exact()
                .unwrap(),
            marg
        );
    }

    #[test]
    fn parts_labels() {
        assert_eq!(label_string(&Label::Parts(vec![2, 1, 1])), "2+1+1");
        let p = crate::dist::OccupancyVector::new(vec![2, 1, 1]).unwrap();
        assert!(occupancy_pmf(&a(1, 2), &p).is_ok());
    }

    #[test]
    fn stirling_round_trips() {
        let t = build_triangle(&a(1, 3), 6);
        let rec = StirlingRecord::from_table(&t).unwrap();
        let back: StirlingRecord = from_json(&to_json(&rec).unwrap()).unwrap();
        assert_eq!(back, rec);
        let csv = to_csv(&rec.stirling).unwrap();
        assert!(csv.starts_with("n,k,numerator,denominator\n1,1,1,1\n"));
        let rows: Vec<TriangleEntry> = from_csv(&csv).unwrap();
        assert_eq!(rows, rec.stirling);
        for e in &rows {
            assert_eq!(&e.value().unwrap(), t.get(e.n, e.k).unwrap());
        }
    }

    #[test]
    fn thermo_records_round_trip() {
        let s = solve_z_rho(&a(1, 2), 2.0).unwrap();
        assert_eq!(
            from_json::<crate::thermo::ThermoSolution>(&to_json(&s).unwrap()).unwrap(),
            s
        );
        let r = classify_rescaled(&a(1, 2), 0.5, 0.5).unwrap();
        assert_eq!(
            from_json::<crate::thermo::RescaledFamily>(&to_json(&r).unwrap()).unwrap(),
            r
        );
        let grid = rate_grid(&a(1, 2), &[2.0], &[1.5, 2.0, 3.0]).unwrap();
        let csv = to_csv(&grid).unwrap();
        assert!(csv.starts_with("rho,r,f\n"));
        assert_eq!(from_csv::<RatePoint>(&csv).unwrap(), grid);
        assert!(grid[1].f.abs() < 1e-10);
    }

    proptest::proptest! {
        #[test]
        fn exported_laws_round_trip(q in 2u64..12, p in 1u64..12, n in 1usize..12) {
            proptest::prop_assume!(p < q);
            let alpha = a(p, q);
            let exact = kn_pmf::<Exact>(&alpha, n).unwrap();
            let back: PmfRecord = from_json(&to_json(&PmfRecord::from_pmf(&exact)).unwrap()).unwrap();
            proptest::prop_assert_eq!(back.to_exact().unwrap(), exact);
            let float = progeny_pmf::<f64>(&alpha, n).unwrap();
            let back: PmfRecord = from_json(&to_json(&PmfRecord::from_pmf(&float)).unwrap()).unwrap();
            proptest::prop_assert_eq!(back.to_float().unwrap(), float);
        }
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            command: "leaves".into(),
            seed: 42,
            stream: 0,
            trials: 3,
            report: vec![1u64, 2, 3],
        };
        assert_eq!(
            from_json::<RunManifest<Vec<u64>>>(&to_json(&m).unwrap()).unwrap(),
            m
        );
    }
}
