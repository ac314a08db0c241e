use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::symcore::{min_eig, SymMatrix};

/// One affine matrix-valued constraint `F_0 + sum_l y_l F_l ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    size: usize,
    /// `mats[0] = F_0`, `mats[l] = F_l` for `l = 1..=m`.
    mats: Vec<SymMatrix>,
    /// Indices `l >= 1` whose `F_l` is not identically zero.
    active: Vec<usize>,
}

impl LmiBlock {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn constant(&self) -> &SymMatrix {
        &self.mats[0]
    }

    /// Coefficient of variable `l` (zero-based).
    pub fn coeff(&self, l: usize) -> &SymMatrix {
        &self.mats[l + 1]
    }

    /// Zero-based variables appearing in this block.
    pub fn active_vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().map(|&l| l - 1)
    }

    pub fn eval(&self, y: &[f64]) -> SymMatrix {
        let mut out = self.mats[0].clone();
        for &l in &self.active {
            out.axpy(y[l - 1], &self.mats[l]);
        }
        out
    }
}

/// Feasibility problem over `m` scalar variables with block-diagonal LMI
/// constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    m: usize,
    blocks: Vec<LmiBlock>,
}

impl LmiProblem {
    pub fn new(m: usize) -> Self {
        LmiProblem {
            m,
            blocks: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    /// Adds a block from `F_0, F_1, ..., F_m`.
    pub fn add_block(&mut self, mats: Vec<SymMatrix>) -> Result<()> {
        if mats.len() != self.m + 1 {
            return Err(Error::DimensionMismatch(format!(
                "block needs {} matrices, got {}",
                self.m + 1,
                mats.len()
            )));
        }
        let size = mats[0].dim();
        if size == 0 || mats.iter().any(|f| f.dim() != size) {
            return Err(Error::DimensionMismatch(
                "block matrices differ in size".into(),
            ));
        }
        if mats.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidInput("non-finite LMI coefficient".into()));
        }
        let active = (1..=self.m).filter(|&l| mats[l].max_abs() > 0.0).collect();
        self.blocks.push(LmiBlock { size, mats, active });
        Ok(())
    }

    /// Adds a block from its constant and a sparse list of `(variable, F_l)`.
    pub fn add_block_sparse(
        &mut self,
        f0: SymMatrix,
        terms: Vec<(usize, SymMatrix)>,
    ) -> Result<()> {
        let k = f0.dim();
        let mut mats = vec![SymMatrix::zeros(k); self.m + 1];
        mats[0] = f0;
        for (l, f) in terms {
            if l >= self.m {
                return Err(Error::DimensionMismatch(format!(
                    "variable {l} out of range"
                )));
            }
            mats[l + 1].axpy(1.0, &f);
        }
        self.add_block(mats)
    }

    /// Scalar constraint `f0 + coeffs . y >= 0`.
    pub fn add_scalar(&mut self, f0: f64, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "scalar constraint needs {} coefficients",
                self.m
            )));
        }
        let mut mats = vec![SymMatrix::from_diag(&[f0])];
        mats.extend(coeffs.iter().map(|&c| SymMatrix::from_diag(&[c])));
        self.add_block(mats)
    }

    /// Box constraints `lb_l <= y_l <= ub_l`, as 1x1 blocks.
    pub fn add_bounds(&mut self, lb: &[f64], ub: &[f64]) -> Result<()> {
        if lb.len() != self.m || ub.len() != self.m {
            return Err(Error::DimensionMismatch("bounds length".into()));
        }
        for l in 0..self.m {
            let mut e = vec![0.0; self.m];
            if lb[l].is_finite() {
                e[l] = 1.0;
                self.add_scalar(-lb[l], &e)?;
            }
            if ub[l].is_finite() {
                e[l] = -1.0;
                self.add_scalar(ub[l], &e)?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, y: &[f64]) -> Vec<SymMatrix> {
        self.blocks.iter().map(|b| b.eval(y)).collect()
    }

    /// `min_b lambda_min(F_b(y))`
    pub fn margin_at(&self, y: &[f64]) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for b in &self.blocks {
            worst = worst.min(min_eig(&b.eval(y))?);
        }
        Ok(worst)
    }
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    #[serde(rename = "F")]
    f: Vec<SymMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    m: usize,
    blocks: Vec<BlockRepr>,
}

impl Serialize for LmiProblem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProblemRepr {
            m: self.m,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockRepr { f: b.mats.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LmiProblem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ProblemRepr::deserialize(d)?;
        let mut p = LmiProblem::new(r.m);
        for b in r.blocks {
            p.add_block(b.f).map_err(D::Error::custom)?;
        }
        Ok(p)
    }
}
