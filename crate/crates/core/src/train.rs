//! Margin triplet training of the projection head with AdamW.

use std::fmt::{self, Write as _};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::head::{ForwardCache, MlpHead, Param};
use crate::manifest::Manifest;
use crate::types::{EmbeddingSet, FeatureVector};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Negatives with a mask weight below this are left out of the pool.
    pub negative_skip_threshold: f64,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    /// Share of training anchors held out when no validation set is given.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 1.0,
            learning_rate: 1e-4,
            batch_size: 32,
            epochs: 100,
            weight_decay: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            negative_skip_threshold: 0.05,
            seed: 0,
            early_stop_patience: 10,
            hidden_dim: 2048,
            out_dim: 2048,
            val_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Contract(m.to_owned()));
        if !(self.margin > 0.0) {
            return bad("margin must be > 0");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.negative_skip_threshold) {
            return bad("negative_skip_threshold must be in [0, 1)");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must be in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be > 0");
        }
        if self.hidden_dim == 0 || self.out_dim == 0 {
            return bad("head dims must be >= 1");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must be in [0, 1)");
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|msg| Error::Parse { line: idx + 1, msg })?;
        }
        self.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = TrainConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value for {k}: {v:?}"))
        }
        match key {
            "margin" => self.margin = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "adam_beta1" => self.adam_beta1 = num(key, value)?,
            "adam_beta2" => self.adam_beta2 = num(key, value)?,
            "adam_eps" => self.adam_eps = num(key, value)?,
            "negative_skip_threshold" => self.negative_skip_threshold = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "early_stop_patience" => self.early_stop_patience = num(key, value)?,
            "hidden_dim" => self.hidden_dim = num(key, value)?,
            "out_dim" => self.out_dim = num(key, value)?,
            "val_fraction" => self.val_fraction = num(key, value)?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }
}

/// `max(‖a − p‖ − ‖a − n‖ + m, 0)`.
pub fn triplet_loss(a: &FeatureVector, p: &FeatureVector, n: &FeatureVector, margin: f64) -> Result<f64> {
    if a.dim() != p.dim() || a.dim() != n.dim() {
        return Err(Error::Shape("triplet members differ in dim".into()));
    }
    Ok(triplet_loss_f64(&a.to_f64(), &p.to_f64(), &n.to_f64(), margin))
}

pub fn triplet_loss_f64(a: &[f64], p: &[f64], n: &[f64], margin: f64) -> f64 {
    (distance(a, p) - distance(a, n) + margin).max(0.0)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One weighted triplet of raw (pre-head) features.
#[derive(Debug, Clone, Copy)]
pub struct TripletInput<'a> {
    pub anchor: &'a [f64],
    pub positive: &'a [f64],
    pub negative: &'a [f64],
    pub weight: f64,
}

/// Gradient (or moment) buffers shaped like an [`MlpHead`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(head: &MlpHead) -> Self {
        Gradients {
            w1: vec![0.0; head.param(Param::W1).len()],
            b1: vec![0.0; head.param(Param::B1).len()],
            w2: vec![0.0; head.param(Param::W2).len()],
            b2: vec![0.0; head.param(Param::B2).len()],
        }
    }

    pub fn get(&self, p: Param) -> &[f64] {
        match p {
            Param::W1 => &self.w1,
            Param::B1 => &self.b1,
            Param::W2 => &self.w2,
            Param::B2 => &self.b2,
        }
    }

    pub fn get_mut(&mut self, p: Param) -> &mut [f64] {
        match p {
            Param::W1 => &mut self.w1,
            Param::B1 => &mut self.b1,
            Param::W2 => &mut self.w2,
            Param::B2 => &mut self.b2,
        }
    }

    pub fn is_zero(&self) -> bool {
        Param::ALL.iter().all(|&p| self.get(p).iter().all(|&g| g == 0.0))
    }

    fn shape_matches(&self, head: &MlpHead) -> bool {
        Param::ALL.iter().all(|&p| self.get(p).len() == head.param(p).len())
    }
}

/// Accumulates `dL/df` for one cached forward pass into `grads`.
fn backprop_into(head: &MlpHead, cache: &ForwardCache, d_out: &[f64], grads: &mut Gradients) {
    let h = head.hidden_dim();
    let c = head.in_dim();
    // Jacobian of f = h/‖h‖ is (I − f fᵀ)/‖h‖
    let f_dot = cache.output.iter().zip(d_out).map(|(f, g)| f * g).sum::<f64>();
    let d_raw: Vec<f64> = d_out
        .iter()
        .zip(&cache.output)
        .map(|(g, f)| (g - f * f_dot) / cache.norm)
        .collect();
    let mut d_hidden = vec![0.0f64; h];
    for (k, &dr) in d_raw.iter().enumerate() {
        grads.b2[k] += dr;
        let row = &head.param(Param::W2)[k * h..(k + 1) * h];
        let g_row = &mut grads.w2[k * h..(k + 1) * h];
        for j in 0..h {
            g_row[j] += dr * cache.hidden[j];
            d_hidden[j] += dr * row[j];
        }
    }
    for j in 0..h {
        // relu'(0) = 0
        if cache.pre_activation[j] <= 0.0 {
            continue;
        }
        let dz = d_hidden[j];
        grads.b1[j] += dz;
        let g_row = &mut grads.w1[j * c..(j + 1) * c];
        for (g, x) in g_row.iter_mut().zip(&cache.input) {
            *g += dz * x;
        }
    }
}

/// Gradients of the weighted mean triplet loss over `batch`.
///
/// The mean divides by the batch length regardless of weights. At the hinge
/// kink (expression exactly 0) the active branch is differentiated.
pub fn backward(head: &MlpHead, batch: &[TripletInput<'_>], margin: f64) -> Result<(Gradients, f64)> {
    let mut grads = Gradients::zeros_like(head);
    if batch.is_empty() {
        return Ok((grads, 0.0));
    }
    let count = batch.len() as f64;
    let mut total = 0.0;
    for t in batch {
        if !(0.0..=1.0).contains(&t.weight) {
            return Err(Error::Contract(format!("triplet weight {} outside [0, 1]", t.weight)));
        }
        let ca = head.forward_cached(t.anchor)?;
        let cp = head.forward_cached(t.positive)?;
        let cn = head.forward_cached(t.negative)?;
        let d_ap = distance(&ca.output, &cp.output);
        let d_an = distance(&ca.output, &cn.output);
        let expr = d_ap - d_an + margin;
        if expr < 0.0 {
            continue;
        }
        total += t.weight * expr;
        let scale = t.weight / count;
        let unit = |a: &[f64], b: &[f64], n: f64| -> Vec<f64> {
            if n > 0.0 {
                a.iter().zip(b).map(|(x, y)| (x - y) / n).collect()
            } else {
                vec![0.0; a.len()]
            }
        };
        let u_ap = unit(&ca.output, &cp.output, d_ap);
        let u_an = unit(&ca.output, &cn.output, d_an);
        let g_a: Vec<f64> = u_ap.iter().zip(&u_an).map(|(p, n)| scale * (p - n)).collect();
        let g_p: Vec<f64> = u_ap.iter().map(|p| -scale * p).collect();
        let g_n: Vec<f64> = u_an.iter().map(|n| scale * n).collect();
        backprop_into(head, &ca, &g_a, &mut grads);
        backprop_into(head, &cp, &g_p, &mut grads);
        backprop_into(head, &cn, &g_n, &mut grads);
    }
    Ok((grads, total / count))
}

/// Weighted mean loss without gradients.
pub fn batch_loss(head: &MlpHead, batch: &[TripletInput<'_>], margin: f64) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for t in batch {
        let a = head.forward_f64(t.anchor)?;
        let p = head.forward_f64(t.positive)?;
        let n = head.forward_f64(t.negative)?;
        total += t.weight * triplet_loss_f64(&a, &p, &n, margin);
    }
    Ok(total / batch.len() as f64)
}

/// AdamW moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(head: &MlpHead) -> Self {
        OptimizerState {
            first: Gradients::zeros_like(head),
            second: Gradients::zeros_like(head),
            step: 0,
        }
    }
}

/// Hyperparameters of one AdamW update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamW {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl From<&TrainConfig> for AdamW {
    fn from(c: &TrainConfig) -> Self {
        AdamW {
            learning_rate: c.learning_rate,
            beta1: c.adam_beta1,
            beta2: c.adam_beta2,
            eps: c.adam_eps,
            weight_decay: c.weight_decay,
        }
    }
}

impl AdamW {
    /// Updates one tensor in place. `step` is the 1-based step count.
    ///
    /// Decay is decoupled: `w ← w(1 − lr·wd) − lr·m̂/(√v̂ + ε)`.
    pub fn update(&self, params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], step: u64, decay: bool) {
        let bc1 = 1.0 - self.beta1.powf(step as f64);
        let bc2 = 1.0 - self.beta2.powf(step as f64);
        let shrink = if decay {
            1.0 - self.learning_rate * self.weight_decay
        } else {
            1.0
        };
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] = params[i] * shrink - self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// One AdamW step on every head tensor; biases are not decayed.
pub fn adamw_step(head: &mut MlpHead, grads: &Gradients, state: &mut OptimizerState, opt: &AdamW) -> Result<()> {
    if !grads.shape_matches(head) || !state.first.shape_matches(head) || !state.second.shape_matches(head) {
        return Err(Error::Shape("gradient/optimizer shapes do not match head".into()));
    }
    state.step += 1;
    for p in Param::ALL {
        opt.update(
            head.param_mut(p),
            grads.get(p),
            state.first.get_mut(p),
            state.second.get_mut(p),
            state.step,
            p.decays(),
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose head was returned (0 = initialisation).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }
}

impl fmt::Display for TrainingLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for e in &self.epochs {
            let val = e.val_loss.map_or_else(|| "-".to_owned(), |v| format!("{v:.9}"));
            let _ = writeln!(s, "epoch={} train_loss={:.9} val_loss={val}", e.epoch, e.train_loss);
        }
        f.write_str(&s)
    }
}

/// Indices into the feature matrix for one pool entry.
#[derive(Debug, Clone)]
struct PoolEntry {
    anchor: usize,
    positive: usize,
    negatives: Vec<(usize, f64)>,
}

/// Builds one entry per (anchor, positive) with the admissible negatives.
fn build_pool(manifest: &Manifest, groups: &[crate::manifest::AnchorGroup], threshold: f64) -> Vec<PoolEntry> {
    let mut pool = Vec::new();
    for g in groups {
        let negatives: Vec<(usize, f64)> = g
            .negatives
            .iter()
            .map(|&i| (i, manifest.records[i].weight))
            .filter(|&(_, w)| w >= threshold)
            .collect();
        if negatives.is_empty() {
            continue;
        }
        for &p in &g.positives {
            pool.push(PoolEntry {
                anchor: g.anchor,
                positive: p,
                negatives: negatives.clone(),
            });
        }
    }
    pool
}

/// Draws one negative per entry; negative kinds are sampled uniformly.
fn sample_triplets<'a>(pool: &[PoolEntry], features: &'a [Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<TripletInput<'a>> {
    pool.iter()
        .map(|e| {
            let &(n, w) = e.negatives.choose(rng).expect("pool entries have negatives");
            TripletInput {
                anchor: &features[e.anchor],
                positive: &features[e.positive],
                negative: &features[n],
                weight: w,
            }
        })
        .collect()
}

fn to_f64_rows(set: &EmbeddingSet) -> Vec<Vec<f64>> {
    set.rows().map(|r| r.iter().map(|&x| f64::from(x)).collect()).collect()
}

fn check_alignment(m: &Manifest, features: &EmbeddingSet) -> Result<()> {
    if m.len() != features.len() {
        return Err(Error::Shape(format!(
            "manifest has {} records but feature file has {} rows",
            m.len(),
            features.len()
        )));
    }
    Ok(())
}

/// Validation pool and the feature rows it indexes.
type ValidationData = (Vec<PoolEntry>, Vec<Vec<f64>>);

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub head: MlpHead,
    pub log: TrainingLog,
}

/// Trains a head on raw features aligned row-for-row with `manifest`.
///
/// With `validation` absent and patience enabled, a seeded `val_fraction` of
/// anchors is held out. The head with the best validation loss is returned;
/// without validation, the last one.
pub fn train_head(
    manifest: &Manifest,
    features: &EmbeddingSet,
    validation: Option<(&Manifest, &EmbeddingSet)>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_alignment(manifest, features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut head = MlpHead::init(features.dim(), cfg.hidden_dim, cfg.out_dim, cfg.seed)?;

    let mut groups = manifest.anchor_groups();
    groups.retain(|g| !g.positives.is_empty());
    let raw = to_f64_rows(features);

    let (train_pool, val_data): (Vec<PoolEntry>, Option<ValidationData>) = match validation {
        Some((vm, vf)) => {
            check_alignment(vm, vf)?;
            if vf.dim() != features.dim() {
                return Err(Error::Shape("validation features differ in dim".into()));
            }
            let vpool = build_pool(vm, &vm.anchor_groups(), cfg.negative_skip_threshold);
            let pool = build_pool(manifest, &groups, cfg.negative_skip_threshold);
            (pool, Some((vpool, to_f64_rows(vf))))
        }
        None if cfg.early_stop_patience > 0 => {
            let mut order: Vec<usize> = (0..groups.len()).collect();
            order.shuffle(&mut rng);
            let held = ((groups.len() as f64) * cfg.val_fraction).ceil() as usize;
            if held == 0 || held >= groups.len() {
                return Err(Error::Training(format!(
                    "cannot hold out a validation split from {} anchors",
                    groups.len()
                )));
            }
            let mut val_mask = vec![false; groups.len()];
            order[..held].iter().for_each(|&i| val_mask[i] = true);
            let (vg, tg): (Vec<_>, Vec<_>) = groups.iter().cloned().enumerate().partition(|(i, _)| val_mask[*i]);
            let vg: Vec<_> = vg.into_iter().map(|(_, g)| g).collect();
            let tg: Vec<_> = tg.into_iter().map(|(_, g)| g).collect();
            let vpool = build_pool(manifest, &vg, cfg.negative_skip_threshold);
            (
                build_pool(manifest, &tg, cfg.negative_skip_threshold),
                Some((vpool, raw.clone())),
            )
        }
        None => (build_pool(manifest, &groups, cfg.negative_skip_threshold), None),
    };
    if train_pool.is_empty() {
        return Err(Error::Training(
            "empty triplet pool: no anchor has a positive and an admissible negative".into(),
        ));
    }
    if let Some((vpool, _)) = &val_data {
        if vpool.is_empty() && cfg.early_stop_patience > 0 {
            return Err(Error::Training("validation split has no usable triplets".into()));
        }
    }

    let opt = AdamW::from(cfg);
    let mut state = OptimizerState::new(&head);
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, MlpHead)> = None;
    let mut stale = 0usize;
    let val_seed = cfg.seed ^ 0x005e_ed0f_7a1d;

    for epoch in 1..=cfg.epochs {
        let mut triplets = sample_triplets(&train_pool, &raw, &mut rng);
        triplets.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in triplets.chunks(cfg.batch_size) {
            let (grads, loss) = backward(&head, batch, cfg.margin)?;
            adamw_step(&mut head, &grads, &mut state, &opt)?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / triplets.len() as f64;

        let val_loss = match &val_data {
            Some((vpool, vraw)) if !vpool.is_empty() => {
                // same negatives every epoch so losses are comparable
                let mut vrng = ChaCha8Rng::seed_from_u64(val_seed);
                let vt = sample_triplets(vpool, vraw, &mut vrng);
                Some(batch_loss(&head, &vt, cfg.margin)?)
            }
            _ => None,
        };
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });

        if let Some(v) = val_loss {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, head.clone()));
                log.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                if cfg.early_stop_patience > 0 && stale >= cfg.early_stop_patience {
                    log.stopped_early = true;
                    break;
                }
            }
        } else {
            log.best_epoch = epoch;
        }
    }

    let head = match best {
        Some((_, h)) => h,
        None => head,
    };
    Ok(TrainOutcome { head, log })
}
