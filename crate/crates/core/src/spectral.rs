//! Splitting `(A, C)` by the sign of the eigenvalue real parts.
//!
//! The real Schur form is reordered into center, unstable and stable groups
//! (in that order) and the coupling blocks are annihilated by Sylvester solves,
//! giving `P⁻¹AP = blockdiag(A⁰, A⁺, A⁻)` and `CP = [C⁰ C⁺ C⁻]`.
//!
//! Eigenvalues are classified per cluster: computed eigenvalues of a defective
//! eigenvalue scatter on a circle of radius about `(ε‖A‖)^{1/k}`, while the
//! mean of the cluster stays accurate to working precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hcat, norm2, real_schur, reorder_schur, solve_sylvester, Matrix, RealSchurForm, ToleranceConfig};
use crate::system::ObservedSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralClass {
    Center,
    Unstable,
    Stable,
}

/// `(n⁰, n⁺, n⁻)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralCounts {
    pub n0: usize,
    pub n_plus: usize,
    pub n_minus: usize,
}

impl SpectralCounts {
    pub fn total(&self) -> usize {
        self.n0 + self.n_plus + self.n_minus
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    /// Change of basis with `P⁻¹AP` block diagonal.
    pub p: Matrix,
    pub p_inv: Matrix,
    pub a0: Matrix,
    pub a_plus: Matrix,
    pub a_minus: Matrix,
    pub c0: Matrix,
    pub c_plus: Matrix,
    pub c_minus: Matrix,
    pub counts: SpectralCounts,
}

impl SpectralSplit {
    pub fn block_diagonal(&self) -> Matrix {
        crate::linalg::block_diag(&[&self.a0, &self.a_plus, &self.a_minus])
    }

    pub fn center(&self) -> Result<ObservedSystem> {
        ObservedSystem::new(self.a0.clone(), self.c0.clone())
    }

    pub fn unstable(&self) -> Result<ObservedSystem> {
        ObservedSystem::new(self.a_plus.clone(), self.c_plus.clone())
    }

    pub fn stable(&self) -> Result<ObservedSystem> {
        ObservedSystem::new(self.a_minus.clone(), self.c_minus.clone())
    }

    /// `(blockdiag(A⁺, A⁻), [C⁺ C⁻])`.
    pub fn hyperbolic(&self) -> Result<ObservedSystem> {
        let p = self.c0.nrows();
        ObservedSystem::new(
            crate::linalg::block_diag(&[&self.a_plus, &self.a_minus]),
            hcat(p, &[&self.c_plus, &self.c_minus]),
        )
    }
}

/// Per-block classification result.
#[derive(Debug, Clone, Copy)]
struct BlockClass {
    class: SpectralClass,
    re: f64,
    abs_im: f64,
}

/// Distance within which `m` computed eigenvalues may be the scattered image
/// of one eigenvalue of multiplicity `m`: rounding of size `ε‖A‖` moves such
/// an eigenvalue by up to about `(ε‖A‖)^{1/m} ‖A‖^{1−1/m}`.
fn cluster_radius(m: usize, scale: f64) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let rel = (1e4 * m as f64 * f64::EPSILON).powf(1.0 / m as f64).min(1e-4);
    rel * scale
}

fn classify_blocks(schur: &RealSchurForm, norm: f64, cfg: &ToleranceConfig) -> Result<Vec<BlockClass>> {
    let threshold = cfg.spec_threshold(norm);
    let scale = norm.max(1.0);

    // (block index, re, im) for every eigenvalue, conjugates included.
    let mut eig = Vec::new();
    for (bi, b) in schur.blocks.iter().enumerate() {
        eig.push((bi, b.re, b.im));
        if b.size == 2 {
            eig.push((bi, b.re, -b.im));
        }
    }
    // Agglomerate closest pairs first; a merge is accepted only if the merged
    // cluster fits the radius for its own size.
    let mut parent: Vec<usize> = (0..eig.len()).collect();
    let mut size = vec![1usize; eig.len()];
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut k = i;
        while parent[k] != r {
            let next = parent[k];
            parent[k] = r;
            k = next;
        }
        r
    }
    let mut edges = Vec::new();
    for i in 0..eig.len() {
        for j in i + 1..eig.len() {
            // The two halves of a complex pair always belong together.
            let d = if eig[i].0 == eig[j].0 { -1.0 } else { (eig[i].1 - eig[j].1).hypot(eig[i].2 - eig[j].2) };
            edges.push((d, i, j));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (d, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj && d <= cluster_radius(size[ri] + size[rj], scale) {
            parent[ri] = rj;
            size[rj] += size[ri];
        }
    }
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); eig.len()];
    for i in 0..eig.len() {
        let r = find(&mut parent, i);
        sums[r].0 += eig[i].1;
        sums[r].1 += eig[i].2.abs();
        sums[r].2 += 1;
    }

    let mut out = vec![None; schur.blocks.len()];
    for i in 0..eig.len() {
        let r = find(&mut parent, i);
        let (sre, sim, count) = sums[r];
        let re = sre / count as f64;
        let abs_im = sim / count as f64;
        let mag = re.abs();
        if mag >= threshold / 10.0 && mag <= threshold * 10.0 {
            return Err(Error::BorderlineSpectrum { real_part: re, threshold });
        }
        let class = if mag <= threshold {
            SpectralClass::Center
        } else if re > 0.0 {
            SpectralClass::Unstable
        } else {
            SpectralClass::Stable
        };
        out[eig[i].0] = Some(BlockClass { class, re, abs_im });
    }
    Ok(out.into_iter().map(|b| b.expect("every block classified")).collect())
}

fn counts_of(schur: &RealSchurForm, classes: &[BlockClass]) -> SpectralCounts {
    let mut counts = SpectralCounts { n0: 0, n_plus: 0, n_minus: 0 };
    for (b, c) in schur.blocks.iter().zip(classes) {
        match c.class {
            SpectralClass::Center => counts.n0 += b.size,
            SpectralClass::Unstable => counts.n_plus += b.size,
            SpectralClass::Stable => counts.n_minus += b.size,
        }
    }
    counts
}

/// `(n⁰, n⁺, n⁻)` of a square matrix.
pub fn eigen_counts(a: &Matrix, cfg: &ToleranceConfig) -> Result<SpectralCounts> {
    let schur = real_schur(a)?;
    let classes = classify_blocks(&schur, norm2(a), cfg)?;
    Ok(counts_of(&schur, &classes))
}

/// `[[I, X], [0, I]]` with the identity blocks sized `k` and `m`.
fn unit_upper(k: usize, x: &Matrix) -> Matrix {
    let m = x.ncols();
    let mut out = Matrix::identity(k + m, k + m);
    out.view_mut((0, k), (k, m)).copy_from(x);
    out
}

pub fn spectral_split(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<SpectralSplit> {
    let a = sys.a();
    let n = sys.n();
    let norm = norm2(a);
    let schur = real_schur(a)?;
    let classes = classify_blocks(&schur, norm, cfg)?;
    let counts = counts_of(&schur, &classes);

    // `reorder_schur` evaluates keys once, on the original block layout.
    let keys: Vec<(SpectralClass, f64, f64)> = classes.iter().map(|c| (c.class, c.re, c.abs_im)).collect();
    let offsets: Vec<usize> = schur.blocks.iter().map(|b| b.offset).collect();
    let ordered = reorder_schur(&schur, |b| {
        let idx = offsets.iter().position(|&o| o == b.offset).expect("original block");
        keys[idx]
    })?;

    let (n0, np, nm) = (counts.n0, counts.n_plus, counts.n_minus);
    let t = &ordered.t;
    let mut p = ordered.q.clone();
    let mut p_inv = ordered.q.transpose();

    let t00 = t.view((0, 0), (n0, n0)).into_owned();
    let tpp = t.view((n0, n0), (np, np)).into_owned();
    let tmm = t.view((n0 + np, n0 + np), (nm, nm)).into_owned();
    let t0p = t.view((0, n0), (n0, np)).into_owned();
    let t0m = t.view((0, n0 + np), (n0, nm)).into_owned();
    let tpm = t.view((n0, n0 + np), (np, nm)).into_owned();

    // (+,−): Tpp X − X Tmm = −Tpm
    let x_pm = solve_sylvester(&tmm, &tpp, &(-&tpm), cfg)?;
    // Column block − of T·M1 picks up T0p·X_pm.
    let t0m_eff = &t0m + &t0p * &x_pm;
    // (0,+) and (0,−) against the now block-diagonal hyperbolic part.
    let x_0p = solve_sylvester(&tpp, &t00, &(-&t0p), cfg)?;
    let x_0m = solve_sylvester(&tmm, &t00, &(-&t0m_eff), cfg)?;

    let mut m1 = Matrix::identity(n, n);
    m1.view_mut((n0, n0), (np + nm, np + nm)).copy_from(&unit_upper(np, &x_pm));
    let mut m1_inv = Matrix::identity(n, n);
    m1_inv.view_mut((n0, n0), (np + nm, np + nm)).copy_from(&unit_upper(np, &(-&x_pm)));
    let x0 = hcat(n0, &[&x_0p, &x_0m]);
    let m2 = unit_upper(n0, &x0);
    let m2_inv = unit_upper(n0, &(-&x0));

    p = p * m1 * m2;
    p_inv = m2_inv * m1_inv * p_inv;

    let cp = sys.c() * &p;
    let pp = sys.p();
    Ok(SpectralSplit {
        p,
        p_inv,
        a0: t00,
        a_plus: tpp,
        a_minus: tmm,
        c0: cp.view((0, 0), (pp, n0)).into_owned(),
        c_plus: cp.view((0, n0), (pp, np)).into_owned(),
        c_minus: cp.view((0, n0 + np), (pp, nm)).into_owned(),
        counts,
    })
}
