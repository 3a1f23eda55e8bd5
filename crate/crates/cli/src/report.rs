//! Factorization report: every leaf factor with its local matrix,
//! generator and product-basis expansion, the reconstruction residual and
//! the entangling inventory.

use std::time::Duration;

use bipartite_cartan::classify::{annotate, inventory, tensor_expand, GeneratorCoefficients};
use bipartite_cartan::linalg::expm;
use bipartite_cartan::recursion::{Factor, FactorKind, Locality};
use bipartite_cartan::{BipartiteShape, FactorTree, Matrix, Tolerance};
use num_complex::Complex64;

use crate::format::{complex, num, write_entries, FormatError, Lines};

pub const REPORT_HEADER: &str = "bipartite-cartan report v1";

#[derive(Debug, Clone, PartialEq)]
pub struct TermRecord {
    pub left: String,
    pub right: String,
    pub coefficient: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorRecord {
    pub kind: FactorKind,
    pub level: usize,
    pub locality: Locality,
    pub support: Vec<usize>,
    pub angle: f64,
    pub matrix: Matrix,
    pub generator: Matrix,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryRecord {
    pub family: String,
    pub count: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub d1: usize,
    pub d2: usize,
    pub strategy: String,
    pub tolerance: Tolerance,
    pub input: Matrix,
    pub factors: Vec<FactorRecord>,
    pub residual: f64,
    pub inventory: Vec<InventoryRecord>,
    pub timing_ms: f64,
}

fn terms_of(c: &GeneratorCoefficients) -> Vec<TermRecord> {
    c.terms
        .iter()
        .map(|t| TermRecord {
            left: t.left.to_string(),
            right: t.right.to_string(),
            coefficient: t.coefficient,
        })
        .collect()
}

fn locality_label(l: Locality) -> &'static str {
    match l {
        Locality::Local => "local",
        Locality::Entangling => "entangling",
    }
}

impl Report {
    pub fn from_tree(tree: &FactorTree, tol: &Tolerance, elapsed: Duration) -> bipartite_cartan::Result<Self> {
        let mut tree = tree.clone();
        annotate(&mut tree, tol)?;
        let mut factors = Vec::with_capacity(tree.factors.len());
        for f in &tree.factors {
            let c = tensor_expand(&f.generator(), tree.shape, tol)?;
            factors.push(FactorRecord {
                kind: f.kind,
                level: f.level,
                locality: f.locality.unwrap_or(Locality::Entangling),
                support: f.support.clone(),
                angle: f.angle,
                matrix: f.local_matrix.clone(),
                generator: f.local_generator.clone(),
                terms: terms_of(&c),
            });
        }
        let mut inv = Vec::new();
        for e in inventory(&tree, tol)?.entries {
            let c = tensor_expand(&e.representative, tree.shape, tol)?;
            inv.push(InventoryRecord {
                family: e.family.label(),
                count: e.count,
                terms: terms_of(&c),
            });
        }
        Ok(Report {
            d1: tree.shape.d1,
            d2: tree.shape.d2,
            strategy: tree.strategy.label(),
            tolerance: *tol,
            input: tree.input.clone(),
            factors,
            residual: tree.residual(),
            inventory: inv,
            timing_ms: elapsed.as_secs_f64() * 1e3,
        })
    }

    pub fn n(&self) -> usize {
        self.d1 * self.d2
    }

    /// Left-to-right product of the stored factors.
    pub fn product(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::identity(n);
        for r in &self.factors {
            let f = Factor {
                kind: r.kind,
                level: r.level,
                n,
                support: r.support.clone(),
                local_matrix: r.matrix.clone(),
                local_generator: r.generator.clone(),
                angle: r.angle,
                locality: Some(r.locality),
            };
            f.apply_right(&mut m);
        }
        m
    }

    pub fn recomputed_residual(&self) -> f64 {
        self.product().distance(&self.input)
    }

    pub fn to_text(&self) -> String {
        let t = &self.tolerance;
        let mut out = format!(
            "{REPORT_HEADER}\nshape {} {}\nstrategy {}\ntolerance {} {} {} {}\ninput\n",
            self.d1,
            self.d2,
            self.strategy,
            num(t.reconstruction),
            num(t.orthogonality),
            num(t.cluster),
            num(t.zero)
        );
        write_entries(&mut out, &self.input);
        out.push_str(&format!("factors {}\n", self.factors.len()));
        for (i, f) in self.factors.iter().enumerate() {
            let support: Vec<String> = f.support.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!(
                "factor {} kind {} level {} locality {}\nsupport {}\nangle {}\nmatrix\n",
                i + 1,
                f.kind,
                f.level,
                locality_label(f.locality),
                support.join(" "),
                num(f.angle)
            ));
            write_entries(&mut out, &f.matrix);
            out.push_str("generator\n");
            write_entries(&mut out, &f.generator);
            write_terms(&mut out, &f.terms);
        }
        out.push_str(&format!("residual {}\n", num(self.residual)));
        out.push_str(&format!("inventory {}\n", self.inventory.len()));
        for e in &self.inventory {
            out.push_str(&format!("family {} count {}\n", e.family, e.count));
            write_terms(&mut out, &e.terms);
        }
        out.push_str(&format!("timing_ms {}\n", num(self.timing_ms)));
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = Lines::new(text);
        if lines.next_line("header")? != REPORT_HEADER {
            return Err(lines.error(format!("expected header `{REPORT_HEADER}`")));
        }
        let shape = lines.keyed("shape")?;
        if shape.len() != 2 {
            return Err(lines.error("expected `shape d1 d2`"));
        }
        let (d1, d2): (usize, usize) = (lines.parse(shape[0])?, lines.parse(shape[1])?);
        let strategy = lines.keyed("strategy")?.join(" ");
        let tw = lines.keyed("tolerance")?;
        if tw.len() != 4 {
            return Err(lines.error("expected four tolerances"));
        }
        let tolerance = Tolerance {
            reconstruction: lines.parse(tw[0])?,
            orthogonality: lines.parse(tw[1])?,
            cluster: lines.parse(tw[2])?,
            zero: lines.parse(tw[3])?,
        };
        lines.keyed("input")?;
        let n = d1 * d2;
        let input = lines.matrix(n, n)?;
        let count: usize = single(&mut lines, "factors")?;
        let mut factors = Vec::with_capacity(count);
        for _ in 0..count {
            let head = lines.keyed("factor")?;
            if head.len() != 7 || head[1] != "kind" || head[3] != "level" || head[5] != "locality" {
                return Err(lines.error("malformed factor header"));
            }
            let kind = FactorKind::from_label(head[2]).ok_or_else(|| lines.error("unknown factor kind"))?;
            let level = lines.parse(head[4])?;
            let locality = match head[6] {
                "local" => Locality::Local,
                "entangling" => Locality::Entangling,
                _ => return Err(lines.error("unknown locality")),
            };
            let support = lines
                .keyed("support")?
                .iter()
                .map(|w| lines.parse(w))
                .collect::<Result<Vec<usize>, _>>()?;
            if support.is_empty() || support.iter().any(|&s| s >= n) {
                return Err(lines.error("support out of range"));
            }
            let angle = single(&mut lines, "angle")?;
            let k = support.len();
            lines.keyed("matrix")?;
            let matrix = lines.matrix(k, k)?;
            lines.keyed("generator")?;
            let generator = lines.matrix(k, k)?;
            let terms = read_terms(&mut lines)?;
            factors.push(FactorRecord {
                kind,
                level,
                locality,
                support,
                angle,
                matrix,
                generator,
                terms,
            });
        }
        let residual = single(&mut lines, "residual")?;
        let families: usize = single(&mut lines, "inventory")?;
        let mut inventory = Vec::with_capacity(families);
        for _ in 0..families {
            let head = lines.keyed("family")?;
            let k = head.len();
            if k < 3 || head[k - 2] != "count" {
                return Err(lines.error("malformed family line"));
            }
            inventory.push(InventoryRecord {
                family: head[..k - 2].join(" "),
                count: lines.parse(head[k - 1])?,
                terms: read_terms(&mut lines)?,
            });
        }
        let timing_ms = single(&mut lines, "timing_ms")?;
        Ok(Report {
            d1,
            d2,
            strategy,
            tolerance,
            input,
            factors,
            residual,
            inventory,
            timing_ms,
        })
    }

    pub fn shape(&self) -> BipartiteShape {
        BipartiteShape {
            d1: self.d1,
            d2: self.d2,
        }
    }
}

fn single<T: std::str::FromStr>(lines: &mut Lines, key: &'static str) -> Result<T, FormatError> {
    let words = lines.keyed(key)?;
    if words.len() != 1 {
        return Err(lines.error(format!("expected `{key} <value>`")));
    }
    lines.parse(words[0])
}

fn write_terms(out: &mut String, terms: &[TermRecord]) {
    out.push_str(&format!("terms {}\n", terms.len()));
    for t in terms {
        out.push_str(&format!("{} {} {}\n", t.left, t.right, complex(t.coefficient)));
    }
}

fn read_terms(lines: &mut Lines) -> Result<Vec<TermRecord>, FormatError> {
    let count: usize = single(lines, "terms")?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next_line("term")?;
        let w: Vec<&str> = line.split_whitespace().collect();
        if w.len() != 4 {
            return Err(lines.error("expected `left right re im`"));
        }
        out.push(TermRecord {
            left: w[0].to_string(),
            right: w[1].to_string(),
            coefficient: Complex64::new(lines.parse(w[2])?, lines.parse(w[3])?),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub recomputed: f64,
    pub stored: f64,
    /// Largest `‖exp(generator) − matrix‖` over the factors.
    pub generator_defect: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("stored residual {stored} disagrees with recomputed {recomputed}")]
    ResidualMismatch { stored: f64, recomputed: f64 },
    #[error("product misses the input by {0} (bound {1})")]
    Reconstruction(f64, f64),
    #[error("factor {0}: exp(generator) differs from its matrix by {1}")]
    Generator(usize, f64),
}

/// Re-multiplies the factors and compares with the stored residual.
pub fn verify(report: &Report) -> Result<Verification, VerifyError> {
    let recomputed = report.recomputed_residual();
    let stored = report.residual;
    let scale = recomputed.abs().max(stored.abs());
    if (recomputed - stored).abs() > 1e-14 * scale {
        return Err(VerifyError::ResidualMismatch { stored, recomputed });
    }
    let bound = report.tolerance.reconstruction * report.factors.len().max(1) as f64;
    if recomputed > bound {
        return Err(VerifyError::Reconstruction(recomputed, bound));
    }
    let mut generator_defect = 0.0f64;
    for (i, f) in report.factors.iter().enumerate() {
        let d = expm(&f.generator).distance(&f.matrix);
        if d > report.tolerance.reconstruction {
            return Err(VerifyError::Generator(i + 1, d));
        }
        generator_defect = generator_defect.max(d);
    }
    Ok(Verification {
        recomputed,
        stored,
        generator_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bipartite_cartan::sample::random_unitary;
    use bipartite_cartan::{recursive_decompose, SplitStrategy};

    fn sample_report() -> Report {
        let tol = Tolerance::default();
        let shape = BipartiteShape::new(2, 3).unwrap();
        let tree = recursive_decompose(&random_unitary(6, 4), shape, &SplitStrategy::Balanced, &tol).unwrap();
        Report::from_tree(&tree, &tol, Duration::from_millis(3)).unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let r = sample_report();
        let text = r.to_text();
        let back = Report::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn verify_accepts_and_rejects() {
        let mut r = sample_report();
        let v = verify(&r).unwrap();
        assert_eq!(v.recomputed, v.stored);
        r.residual *= 2.0;
        r.residual += 1e-12;
        assert!(matches!(verify(&r), Err(VerifyError::ResidualMismatch { .. })));
    }

    #[test]
    fn verify_rejects_altered_factor() {
        let mut r = sample_report();
        r.factors[0].matrix[(0, 0)] += 1e-3;
        r.residual = r.recomputed_residual();
        assert!(verify(&r).is_err());
    }

    #[test]
    fn malformed_reports() {
        let text = sample_report().to_text();
        assert!(Report::parse(&text.replace("kind", "sort")).is_err());
        assert!(Report::parse(&text[..text.len() / 2]).is_err());
        assert!(Report::parse("").is_err());
    }
}
