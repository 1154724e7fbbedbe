//! Stacked bidirectional GRU tagger with highway connections and two
//! softmax heads: children BIO labels and per-token auxiliary labels.
//!
//! Per token the input is `[word vector; categorical embeddings; mwe flag]`,
//! projected linearly to the model width `2h`. Each layer runs a GRU in both
//! directions and mixes its output `H` with the layer input `u` through a
//! transform gate: `t * H + (1 - t) * u`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{sigmoid, softmax, ParamSet, Tensor};
use super::TaggerError;
use crate::bio::{BioLabel, TagDistribution};
use crate::features::FeaturizedExample;

/// Probabilities are clipped to this range before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;
pub const PROB_CEIL: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub word_dim: usize,
    pub table_sizes: Vec<usize>,
    pub embedding_dims: Vec<usize>,
    /// Hidden width per direction.
    pub hidden: usize,
    pub layers: usize,
    pub aux_labels: usize,
}

impl ModelDims {
    pub fn input_dim(&self) -> usize {
        self.word_dim + self.embedding_dims.iter().sum::<usize>() + 1
    }

    pub fn width(&self) -> usize {
        2 * self.hidden
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct GruSlots {
    w_r: usize,
    u_r: usize,
    b_r: usize,
    w_z: usize,
    u_z: usize,
    b_z: usize,
    w_n: usize,
    u_n: usize,
    b_n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LayerSlots {
    dirs: [GruSlots; 2],
    w_gate: usize,
    b_gate: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    embeddings: Vec<usize>,
    w_in: usize,
    b_in: usize,
    layers: Vec<LayerSlots>,
    w_bio: usize,
    b_bio: usize,
    w_aux: usize,
    b_aux: usize,
}

/// Builds zero tensors in canonical order and records their slots.
fn build_layout(dims: &ModelDims) -> (ParamSet, Layout) {
    let mut ps = ParamSet::default();
    let h = dims.hidden;
    let m = dims.width();
    let embeddings = dims
        .table_sizes
        .iter()
        .zip(&dims.embedding_dims)
        .enumerate()
        .map(|(i, (&rows, &cols))| ps.push(Tensor::zeros(format!("emb.{i}"), rows, cols)))
        .collect();
    let w_in = ps.push(Tensor::zeros("input.w", m, dims.input_dim()));
    let b_in = ps.push(Tensor::zeros("input.b", m, 1));
    let mut layers = Vec::new();
    for l in 0..dims.layers {
        let mut dir = |d: &str| {
            let mut t = |name: &str, rows, cols| ps.push(Tensor::zeros(format!("gru{l}.{d}.{name}"), rows, cols));
            GruSlots {
                w_r: t("w_r", h, m),
                u_r: t("u_r", h, h),
                b_r: t("b_r", h, 1),
                w_z: t("w_z", h, m),
                u_z: t("u_z", h, h),
                b_z: t("b_z", h, 1),
                w_n: t("w_n", h, m),
                u_n: t("u_n", h, h),
                b_n: t("b_n", h, 1),
            }
        };
        let dirs = [dir("fw"), dir("bw")];
        let w_gate = ps.push(Tensor::zeros(format!("highway{l}.w"), m, m));
        let b_gate = ps.push(Tensor::zeros(format!("highway{l}.b"), m, 1));
        layers.push(LayerSlots { dirs, w_gate, b_gate });
    }
    let w_bio = ps.push(Tensor::zeros("bio.w", BioLabel::COUNT, m));
    let b_bio = ps.push(Tensor::zeros("bio.b", BioLabel::COUNT, 1));
    let w_aux = ps.push(Tensor::zeros("aux.w", dims.aux_labels, m));
    let b_aux = ps.push(Tensor::zeros("aux.b", dims.aux_labels, 1));
    (
        ps,
        Layout {
            embeddings,
            w_in,
            b_in,
            layers,
            w_bio,
            b_bio,
            w_aux,
            b_aux,
        },
    )
}

/// Initial transform-gate bias; negative values favour carrying the input.
const GATE_BIAS: f64 = -1.0;

/// Target label indices for one example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Targets {
    pub bio: Vec<usize>,
    pub aux: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GruTagger {
    pub dims: ModelDims,
    pub params: ParamSet,
    layout: Layout,
}

#[derive(Default)]
struct DirCache {
    /// Hidden state entering each step, indexed by position.
    h_prev: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    n: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

struct LayerCache {
    input: Vec<Vec<f64>>,
    dirs: [DirCache; 2],
    /// `[h_fw; h_bw]` per position.
    joined: Vec<Vec<f64>>,
    gate: Vec<Vec<f64>>,
}

struct Cache {
    x: Vec<Vec<f64>>,
    layers: Vec<LayerCache>,
    out: Vec<Vec<f64>>,
    bio: Vec<Vec<f64>>,
    aux: Vec<Vec<f64>>,
}

impl GruTagger {
    /// Randomly initialized model; deterministic in `seed`.
    pub fn new(dims: ModelDims, seed: u64) -> Self {
        let (mut params, layout) = build_layout(&dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in params.tensors.iter_mut() {
            if t.name.starts_with("emb.") {
                t.fill_uniform(&mut rng, 0.1);
            } else if t.cols > 1 {
                let bound = (6.0 / (t.rows + t.cols) as f64).sqrt();
                t.fill_uniform(&mut rng, bound);
            } else if t.name.starts_with("highway") {
                t.data.iter_mut().for_each(|v| *v = GATE_BIAS);
            }
        }
        GruTagger { dims, params, layout }
    }

    /// Rebuilds a model from stored tensors, checking names and shapes.
    pub fn from_params(dims: ModelDims, params: ParamSet) -> Result<Self, TaggerError> {
        let (expected, layout) = build_layout(&dims);
        if expected.tensors.len() != params.tensors.len() {
            return Err(TaggerError::Shape(format!(
                "expected {} tensors, found {}",
                expected.tensors.len(),
                params.tensors.len()
            )));
        }
        for (e, p) in expected.tensors.iter().zip(&params.tensors) {
            if e.name != p.name || e.rows != p.rows || e.cols != p.cols || p.data.len() != p.rows * p.cols {
                return Err(TaggerError::Shape(format!(
                    "tensor {} has shape {}x{}, expected {} {}x{}",
                    p.name, p.rows, p.cols, e.name, e.rows, e.cols
                )));
            }
        }
        Ok(GruTagger { dims, params, layout })
    }

    fn t(&self, slot: usize) -> &Tensor {
        &self.params.tensors[slot]
    }

    fn check_input(&self, ex: &FeaturizedExample) -> Result<(), TaggerError> {
        if ex.categorical.len() != ex.len() || ex.mwe.len() != ex.len() {
            return Err(TaggerError::Shape("feature sequences differ in length".into()));
        }
        for (t, (w, cats)) in ex.words.iter().zip(&ex.categorical).enumerate() {
            if w.len() != self.dims.word_dim {
                return Err(TaggerError::Shape(format!(
                    "token {t}: word vector of width {}, expected {}",
                    w.len(),
                    self.dims.word_dim
                )));
            }
            if cats.len() != self.dims.table_sizes.len() {
                return Err(TaggerError::Shape(format!(
                    "token {t}: {} categorical features, expected {}",
                    cats.len(),
                    self.dims.table_sizes.len()
                )));
            }
            for (k, (&idx, &size)) in cats.iter().zip(&self.dims.table_sizes).enumerate() {
                if idx >= size {
                    return Err(TaggerError::Shape(format!(
                        "token {t}: index {idx} outside table {k} of size {size}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn input_vector(&self, ex: &FeaturizedExample, t: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dims.input_dim());
        x.extend_from_slice(&ex.words[t]);
        for (&slot, &idx) in self.layout.embeddings.iter().zip(&ex.categorical[t]) {
            x.extend_from_slice(self.t(slot).row(idx));
        }
        x.push(if ex.mwe[t] { 1.0 } else { 0.0 });
        x
    }

    fn run_direction(&self, slots: &GruSlots, input: &[Vec<f64>], reverse: bool) -> DirCache {
        let h = self.dims.hidden;
        let len = input.len();
        let mut cache = DirCache {
            h_prev: vec![Vec::new(); len],
            r: vec![Vec::new(); len],
            z: vec![Vec::new(); len],
            n: vec![Vec::new(); len],
            h: vec![Vec::new(); len],
        };
        let mut state = vec![0.0; h];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..len).rev())
        } else {
            Box::new(0..len)
        };
        for t in order {
            let x = &input[t];
            let gate = |w: usize, u: usize, b: usize, hp: &[f64]| {
                let mut a = self.t(b).data.clone();
                self.t(w).matvec_add(x, &mut a);
                self.t(u).matvec_add(hp, &mut a);
                a
            };
            let r: Vec<f64> = gate(slots.w_r, slots.u_r, slots.b_r, &state)
                .into_iter()
                .map(sigmoid)
                .collect();
            let z: Vec<f64> = gate(slots.w_z, slots.u_z, slots.b_z, &state)
                .into_iter()
                .map(sigmoid)
                .collect();
            let rh: Vec<f64> = r.iter().zip(&state).map(|(a, b)| a * b).collect();
            let n: Vec<f64> = gate(slots.w_n, slots.u_n, slots.b_n, &rh)
                .into_iter()
                .map(f64::tanh)
                .collect();
            let next: Vec<f64> = (0..h).map(|i| (1.0 - z[i]) * n[i] + z[i] * state[i]).collect();
            cache.h_prev[t] = std::mem::replace(&mut state, next.clone());
            cache.r[t] = r;
            cache.z[t] = z;
            cache.n[t] = n;
            cache.h[t] = next;
        }
        cache
    }

    fn forward_cached(&self, ex: &FeaturizedExample) -> Result<Cache, TaggerError> {
        self.check_input(ex)?;
        let len = ex.len();
        let m = self.dims.width();
        let x: Vec<Vec<f64>> = (0..len).map(|t| self.input_vector(ex, t)).collect();
        let mut current: Vec<Vec<f64>> = x
            .iter()
            .map(|xt| {
                let mut u = self.t(self.layout.b_in).data.clone();
                self.t(self.layout.w_in).matvec_add(xt, &mut u);
                u
            })
            .collect();
        let mut layers = Vec::with_capacity(self.dims.layers);
        for slots in &self.layout.layers {
            let fw = self.run_direction(&slots.dirs[0], &current, false);
            let bw = self.run_direction(&slots.dirs[1], &current, true);
            let mut joined = Vec::with_capacity(len);
            let mut gate = Vec::with_capacity(len);
            let mut out = Vec::with_capacity(len);
            for t in 0..len {
                let hcat: Vec<f64> = fw.h[t].iter().chain(&bw.h[t]).copied().collect();
                let mut g = self.t(slots.b_gate).data.clone();
                self.t(slots.w_gate).matvec_add(&current[t], &mut g);
                g.iter_mut().for_each(|v| *v = sigmoid(*v));
                out.push((0..m).map(|i| g[i] * hcat[i] + (1.0 - g[i]) * current[t][i]).collect());
                joined.push(hcat);
                gate.push(g);
            }
            layers.push(LayerCache {
                input: std::mem::replace(&mut current, out),
                dirs: [fw, bw],
                joined,
                gate,
            });
        }
        let head = |w: usize, b: usize| -> Vec<Vec<f64>> {
            current
                .iter()
                .map(|o| {
                    let mut logits = self.t(b).data.clone();
                    self.t(w).matvec_add(o, &mut logits);
                    softmax(&mut logits);
                    logits
                })
                .collect()
        };
        let bio = head(self.layout.w_bio, self.layout.b_bio);
        let aux = head(self.layout.w_aux, self.layout.b_aux);
        let finite = |rows: &[Vec<f64>]| rows.iter().all(|r| r.iter().all(|v| v.is_finite()));
        if !finite(&bio) || !finite(&aux) {
            return Err(TaggerError::NonFinite("output distribution".into()));
        }
        Ok(Cache {
            x,
            layers,
            out: current,
            bio,
            aux,
        })
    }

    pub fn forward(&self, ex: &FeaturizedExample) -> Result<TagDistribution, TaggerError> {
        let cache = self.forward_cached(ex)?;
        Ok(TagDistribution {
            bio: cache.bio,
            aux: cache.aux,
        })
    }

    fn check_targets(&self, ex: &FeaturizedExample, targets: &Targets) -> Result<(), TaggerError> {
        if targets.bio.len() != ex.len() || targets.aux.len() != ex.len() {
            return Err(TaggerError::MissingTargets);
        }
        if targets.bio.iter().any(|&i| i >= BioLabel::COUNT) || targets.aux.iter().any(|&i| i >= self.dims.aux_labels) {
            return Err(TaggerError::Shape("target index outside label vocabulary".into()));
        }
        Ok(())
    }

    /// Mean children cross-entropy plus `aux_weight` times the mean auxiliary cross-entropy.
    pub fn loss(&self, ex: &FeaturizedExample, targets: &Targets, aux_weight: f64) -> Result<f64, TaggerError> {
        self.check_targets(ex, targets)?;
        let dist = self.forward(ex)?;
        Ok(cross_entropy(&dist, targets, aux_weight))
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn gradients(
        &self,
        ex: &FeaturizedExample,
        targets: &Targets,
        aux_weight: f64,
    ) -> Result<(f64, ParamSet), TaggerError> {
        self.check_targets(ex, targets)?;
        let cache = self.forward_cached(ex)?;
        let loss = cross_entropy(
            &TagDistribution {
                bio: cache.bio.clone(),
                aux: cache.aux.clone(),
            },
            targets,
            aux_weight,
        );
        let mut grads = self.params.zeros_like();
        let len = ex.len();
        let m = self.dims.width();
        let scale = 1.0 / len as f64;

        let mut d_out = vec![vec![0.0; m]; len];
        for t in 0..len {
            let mut dl = cache.bio[t].clone();
            dl[targets.bio[t]] -= 1.0;
            dl.iter_mut().for_each(|v| *v *= scale);
            grads.tensors[self.layout.w_bio].outer_add(&dl, &cache.out[t]);
            grads.tensors[self.layout.b_bio].add_vec(&dl);
            self.t(self.layout.w_bio).matvec_t_add(&dl, &mut d_out[t]);

            if aux_weight != 0.0 {
                let mut da = cache.aux[t].clone();
                da[targets.aux[t]] -= 1.0;
                da.iter_mut().for_each(|v| *v *= scale * aux_weight);
                grads.tensors[self.layout.w_aux].outer_add(&da, &cache.out[t]);
                grads.tensors[self.layout.b_aux].add_vec(&da);
                self.t(self.layout.w_aux).matvec_t_add(&da, &mut d_out[t]);
            }
        }

        for (slots, lc) in self.layout.layers.iter().zip(&cache.layers).rev() {
            let h = self.dims.hidden;
            let mut d_input = vec![vec![0.0; m]; len];
            let mut d_fw = vec![vec![0.0; h]; len];
            let mut d_bw = vec![vec![0.0; h]; len];
            for t in 0..len {
                let g = &lc.gate[t];
                let u = &lc.input[t];
                let hc = &lc.joined[t];
                let d = &d_out[t];
                let mut d_gate_pre = vec![0.0; m];
                for i in 0..m {
                    let dh = d[i] * g[i];
                    if i < h {
                        d_fw[t][i] = dh;
                    } else {
                        d_bw[t][i - h] = dh;
                    }
                    d_input[t][i] += d[i] * (1.0 - g[i]);
                    d_gate_pre[i] = d[i] * (hc[i] - u[i]) * g[i] * (1.0 - g[i]);
                }
                grads.tensors[slots.w_gate].outer_add(&d_gate_pre, u);
                grads.tensors[slots.b_gate].add_vec(&d_gate_pre);
                self.t(slots.w_gate).matvec_t_add(&d_gate_pre, &mut d_input[t]);
            }
            self.backward_direction(&slots.dirs[0], &lc.dirs[0], &lc.input, &d_fw, false, &mut grads, &mut d_input);
            self.backward_direction(&slots.dirs[1], &lc.dirs[1], &lc.input, &d_bw, true, &mut grads, &mut d_input);
            d_out = d_input;
        }

        let mut offsets = Vec::with_capacity(self.layout.embeddings.len());
        let mut offset = self.dims.word_dim;
        for &d in &self.dims.embedding_dims {
            offsets.push(offset);
            offset += d;
        }
        for t in 0..len {
            let du = &d_out[t];
            grads.tensors[self.layout.w_in].outer_add(du, &cache.x[t]);
            grads.tensors[self.layout.b_in].add_vec(du);
            let mut dx = vec![0.0; self.dims.input_dim()];
            self.t(self.layout.w_in).matvec_t_add(du, &mut dx);
            for (k, (&slot, &idx)) in self.layout.embeddings.iter().zip(&ex.categorical[t]).enumerate() {
                let width = self.dims.embedding_dims[k];
                let seg = &dx[offsets[k]..offsets[k] + width];
                for (g, v) in grads.tensors[slot].row_mut(idx).iter_mut().zip(seg) {
                    *g += v;
                }
            }
        }

        if !grads.all_finite() {
            return Err(TaggerError::NonFinite("gradient".into()));
        }
        Ok((loss, grads))
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_direction(
        &self,
        slots: &GruSlots,
        cache: &DirCache,
        input: &[Vec<f64>],
        d_h: &[Vec<f64>],
        reverse: bool,
        grads: &mut ParamSet,
        d_input: &mut [Vec<f64>],
    ) {
        let h = self.dims.hidden;
        let len = input.len();
        let mut carry = vec![0.0; h];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new(0..len)
        } else {
            Box::new((0..len).rev())
        };
        for t in order {
            let (r, z, n, hp) = (&cache.r[t], &cache.z[t], &cache.n[t], &cache.h_prev[t]);
            let x = &input[t];
            let dh: Vec<f64> = (0..h).map(|i| d_h[t][i] + carry[i]).collect();
            let mut d_hp: Vec<f64> = (0..h).map(|i| dh[i] * z[i]).collect();

            let da_n: Vec<f64> = (0..h).map(|i| dh[i] * (1.0 - z[i]) * (1.0 - n[i] * n[i])).collect();
            let rh: Vec<f64> = (0..h).map(|i| r[i] * hp[i]).collect();
            grads.tensors[slots.w_n].outer_add(&da_n, x);
            grads.tensors[slots.u_n].outer_add(&da_n, &rh);
            grads.tensors[slots.b_n].add_vec(&da_n);
            self.t(slots.w_n).matvec_t_add(&da_n, &mut d_input[t]);
            let mut d_rh = vec![0.0; h];
            self.t(slots.u_n).matvec_t_add(&da_n, &mut d_rh);

            let da_z: Vec<f64> = (0..h).map(|i| dh[i] * (hp[i] - n[i]) * z[i] * (1.0 - z[i])).collect();
            let da_r: Vec<f64> = (0..h).map(|i| d_rh[i] * hp[i] * r[i] * (1.0 - r[i])).collect();
            for i in 0..h {
                d_hp[i] += d_rh[i] * r[i];
            }
            for (da, w, u, b) in [
                (&da_z, slots.w_z, slots.u_z, slots.b_z),
                (&da_r, slots.w_r, slots.u_r, slots.b_r),
            ] {
                grads.tensors[w].outer_add(da, x);
                grads.tensors[u].outer_add(da, hp);
                grads.tensors[b].add_vec(da);
                self.t(w).matvec_t_add(da, &mut d_input[t]);
                self.t(u).matvec_t_add(da, &mut d_hp);
            }
            carry = d_hp;
        }
    }

}

/// Mean per-token cross-entropy of the children head plus `aux_weight` times
/// that of the auxiliary head, on probabilities clipped to `[PROB_FLOOR, PROB_CEIL]`.
pub fn cross_entropy(dist: &TagDistribution, targets: &Targets, aux_weight: f64) -> f64 {
    let nll = |rows: &[Vec<f64>], gold: &[usize]| -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let total: f64 = rows
            .iter()
            .zip(gold)
            .map(|(row, &g)| -row[g].clamp(PROB_FLOOR, PROB_CEIL).ln())
            .sum();
        total / rows.len() as f64
    };
    let main = nll(&dist.bio, &targets.bio);
    if aux_weight == 0.0 {
        main
    } else {
        main + aux_weight * nll(&dist.aux, &targets.aux)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::WORD_DIM;
    use rand::Rng;

    fn tiny_dims(hidden: usize, layers: usize) -> ModelDims {
        ModelDims {
            word_dim: WORD_DIM,
            table_sizes: vec![4, 5, 3],
            embedding_dims: vec![3, 2, 4],
            hidden,
            layers,
            aux_labels: 3,
        }
    }

    fn random_example(seed: u64, len: usize, dims: &ModelDims) -> (FeaturizedExample, Targets) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ex = FeaturizedExample {
            words: (0..len)
                .map(|_| (0..dims.word_dim).map(|_| rng.gen_range(-0.2..0.2)).collect())
                .collect(),
            categorical: (0..len)
                .map(|_| dims.table_sizes.iter().map(|&s| rng.gen_range(0..s)).collect())
                .collect(),
            mwe: (0..len).map(|_| rng.gen_bool(0.5)).collect(),
        };
        let targets = Targets {
            bio: (0..len).map(|_| rng.gen_range(0..BioLabel::COUNT)).collect(),
            aux: (0..len).map(|_| rng.gen_range(0..dims.aux_labels)).collect(),
        };
        (ex, targets)
    }

    #[test]
    fn rows_are_normalized() {
        let dims = tiny_dims(4, 4);
        let model = GruTagger::new(dims.clone(), 1);
        for len in [1, 2, 5] {
            let (ex, _) = random_example(len as u64, len, &dims);
            let dist = model.forward(&ex).unwrap();
            assert_eq!(dist.len(), len);
            assert_eq!(dist.aux.len(), len);
            dist.check().unwrap();
        }
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let dims = tiny_dims(4, 2);
        let (ex, _) = random_example(9, 4, &dims);
        let a = GruTagger::new(dims.clone(), 5).forward(&ex).unwrap();
        let b = GruTagger::new(dims, 5).forward(&ex).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_errors_are_reported() {
        let dims = tiny_dims(4, 1);
        let model = GruTagger::new(dims.clone(), 1);
        let (mut ex, _) = random_example(1, 2, &dims);
        ex.categorical[1][0] = 99;
        assert!(matches!(model.forward(&ex), Err(TaggerError::Shape(_))));
        let (mut ex, _) = random_example(1, 2, &dims);
        ex.words[0].pop();
        assert!(matches!(model.forward(&ex), Err(TaggerError::Shape(_))));
        let (ex, mut targets) = random_example(1, 2, &dims);
        targets.bio.pop();
        assert!(matches!(model.loss(&ex, &targets, 1.0), Err(TaggerError::MissingTargets)));
    }

    #[test]
    fn non_finite_parameters_are_reported() {
        let dims = tiny_dims(4, 1);
        let mut model = GruTagger::new(dims.clone(), 1);
        let slot = model.layout.b_bio;
        model.params.tensors[slot].data[0] = f64::NAN;
        let (ex, _) = random_example(1, 2, &dims);
        assert!(matches!(model.forward(&ex), Err(TaggerError::NonFinite(_))));
    }

    #[test]
    fn one_hot_loss_is_near_zero() {
        let labels = [BioLabel::Begin(crate::Category::H), BioLabel::Inside(crate::Category::H)];
        let dist = TagDistribution::one_hot(&labels);
        let targets = Targets {
            bio: labels.iter().map(|l| l.index()).collect(),
            aux: vec![0, 0],
        };
        assert!(cross_entropy(&dist, &targets, 1.0) < 1e-6);
    }

    #[test]
    fn uniform_loss_is_ln_53() {
        let dist = TagDistribution {
            bio: vec![vec![1.0 / 53.0; 53]; 3],
            aux: vec![vec![0.5, 0.5]; 3],
        };
        let targets = Targets {
            bio: vec![0, 7, 52],
            aux: vec![0, 1, 0],
        };
        assert!((cross_entropy(&dist, &targets, 0.0) - 53f64.ln()).abs() < 1e-12);
        let both = 53f64.ln() + 2f64.ln();
        assert!((cross_entropy(&dist, &targets, 1.0) - both).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_direct_recomputation() {
        let dims = tiny_dims(4, 2);
        let model = GruTagger::new(dims.clone(), 3);
        let (ex, targets) = random_example(4, 3, &dims);
        let dist = model.forward(&ex).unwrap();
        let mut by_hand = 0.0;
        for t in 0..3 {
            by_hand -= dist.bio[t][targets.bio[t]].ln() / 3.0;
            by_hand -= 0.5 * dist.aux[t][targets.aux[t]].ln() / 3.0;
        }
        let loss = model.loss(&ex, &targets, 0.5).unwrap();
        assert!((loss - by_hand).abs() < 1e-8, "{loss} vs {by_hand}");
    }

    /// Central differences over every value of every tensor.
    fn max_relative_error(model: &GruTagger, ex: &FeaturizedExample, targets: &Targets, aux_weight: f64) -> Vec<(String, f64)> {
        let (_, analytic) = model.gradients(ex, targets, aux_weight).unwrap();
        let eps = 1e-4;
        let mut probe = model.clone();
        let mut out = Vec::new();
        for (k, tensor) in model.params.tensors.iter().enumerate() {
            let mut numeric = vec![0.0; tensor.len()];
            for i in 0..tensor.len() {
                let orig = tensor.data[i];
                probe.params.tensors[k].data[i] = orig + eps;
                let plus = probe.loss(ex, targets, aux_weight).unwrap();
                probe.params.tensors[k].data[i] = orig - eps;
                let minus = probe.loss(ex, targets, aux_weight).unwrap();
                probe.params.tensors[k].data[i] = orig;
                numeric[i] = (plus - minus) / (2.0 * eps);
            }
            let a = &analytic.tensors[k].data;
            let diff: f64 = a.iter().zip(&numeric).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nn: f64 = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
            let denom = na.max(nn);
            out.push((tensor.name.clone(), if denom == 0.0 { 0.0 } else { diff / denom }));
        }
        out
    }

    #[test]
    fn gradients_match_finite_differences() {
        let dims = tiny_dims(3, 2);
        let model = GruTagger::new(dims.clone(), 21);
        let (ex, targets) = random_example(22, 3, &dims);
        for (name, err) in max_relative_error(&model, &ex, &targets, 0.7) {
            assert!(err < 1e-4, "{name}: {err}");
        }
    }

    #[test]
    fn aux_head_gradient_vanishes_without_aux_weight() {
        let dims = tiny_dims(4, 1);
        let model = GruTagger::new(dims.clone(), 2);
        let (ex, targets) = random_example(2, 3, &dims);
        let (_, g) = model.gradients(&ex, &targets, 0.0).unwrap();
        assert_eq!(g.get("aux.w").unwrap().data.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        assert_eq!(g.get("aux.b").unwrap().data.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn zero_loss_example_has_vanishing_gradients() {
        let dims = tiny_dims(4, 2);
        let mut model = GruTagger::new(dims.clone(), 8);
        let (ex, _) = random_example(8, 3, &dims);
        let targets = Targets {
            bio: vec![0; 3],
            aux: vec![1; 3],
        };
        let (b_bio, b_aux) = (model.layout.b_bio, model.layout.b_aux);
        model.params.tensors[b_bio].data[0] = 60.0;
        model.params.tensors[b_aux].data[1] = 60.0;
        let (loss, grads) = model.gradients(&ex, &targets, 1.0).unwrap();
        assert!(loss < 1e-6);
        assert!(grads.max_abs() < 1e-6);
    }

    #[test]
    fn from_params_checks_layout() {
        let dims = tiny_dims(4, 1);
        let model = GruTagger::new(dims.clone(), 2);
        assert_eq!(GruTagger::from_params(dims.clone(), model.params.clone()).unwrap(), model);
        let mut other = dims.clone();
        other.hidden = 5;
        assert!(GruTagger::from_params(other, model.params.clone()).is_err());
    }
}
