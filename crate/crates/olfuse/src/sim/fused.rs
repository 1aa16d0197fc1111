//! Tile-by-tile fused execution at digit granularity.
//!
//! Tiles march across every pyramid level in lockstep; values an earlier
//! tile already produced are reused, so each output pixel is computed once.
//! Convolution pixels run through the real digit pipeline (window units,
//! channel reduction, sign monitor); pooling and rectification act on
//! settled values.

use crate::cost::{self, CycleParams, Design};
use crate::fixed::{self, Fx};
use crate::fusion::FusionPlan;
use crate::msdf::DigitStream;
use crate::net::{LayerKind, NetworkSpec};
use crate::sim::feature::FeatureMap;
use crate::sim::reference::NetWeights;
use crate::sim::SimError;
use crate::sop::{ppu_compute, relu, EndStatus, Kernel, Window, WpuKind};

/// How many digits convolution pixels emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emission {
    /// Truncate to the payload plus the reduction-tree scale digits; stored
    /// activations land exactly on the payload grid.
    Quantized,
    /// Run every stream to full length; results equal settled arithmetic
    /// bit for bit.
    Exact,
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub design: Design,
    pub emission: Emission,
    pub params: CycleParams,
}

impl Default for SimOptions {
    fn default() -> SimOptions {
        SimOptions {
            design: Design::Spatial,
            emission: Emission::Quantized,
            params: CycleParams::default(),
        }
    }
}

/// Digit and cycle totals over one or more simulated inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimReport {
    pub images: u64,
    pub steps: u64,
    /// Cycles when every pixel drains its full emission.
    pub cycles_end_off: u64,
    /// Cycles when the sign monitor cuts rectified-negative pixels short.
    pub cycles_end_on: u64,
    pub conv_pixels: u64,
    /// Pixels the monitor terminated early.
    pub terminated: u64,
    /// Digits consumed with the monitor active.
    pub digits_with_end: u64,
    /// Digits consumed when every stream runs to length.
    pub digits_without_end: u64,
}

impl SimReport {
    pub fn merge(&mut self, other: &SimReport) {
        self.images += other.images;
        self.steps += other.steps;
        self.cycles_end_off += other.cycles_end_off;
        self.cycles_end_on += other.cycles_end_on;
        self.conv_pixels += other.conv_pixels;
        self.terminated += other.terminated;
        self.digits_with_end += other.digits_with_end;
        self.digits_without_end += other.digits_without_end;
    }

    /// Fraction of pixel digits the monitor avoids consuming.
    pub fn end_savings(&self) -> f64 {
        if self.digits_without_end == 0 {
            return 0.0;
        }
        1.0 - self.digits_with_end as f64 / self.digits_without_end as f64
    }
}

/// One simulated image: every level's output map plus the digit accounting.
#[derive(Clone, Debug)]
pub struct SimRun {
    pub levels: Vec<FeatureMap>,
    pub report: SimReport,
}

impl SimRun {
    pub fn output(&self) -> &FeatureMap {
        self.levels.last().expect("plans have at least one level")
    }
}

struct Grid {
    side: usize,
    channels: usize,
    vals: Vec<Option<Fx>>,
}

impl Grid {
    fn empty(side: usize, channels: usize) -> Grid {
        Grid { side, channels, vals: vec![None; side * side * channels] }
    }

    fn full(map: &FeatureMap) -> Grid {
        Grid {
            side: map.side(),
            channels: map.channels(),
            vals: map.values().iter().copied().map(Some).collect(),
        }
    }

    fn idx(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.side + y) * self.side + x
    }

    fn get(&self, c: usize, y: usize, x: usize) -> Option<Fx> {
        self.vals[self.idx(c, y, x)]
    }

    fn set(&mut self, c: usize, y: usize, x: usize, v: Fx) {
        let i = self.idx(c, y, x);
        self.vals[i] = v.into();
    }

    fn to_feature_map(&self) -> FeatureMap {
        FeatureMap::from_fn(self.side, self.channels, |c, y, x| {
            self.get(c, y, x).expect("tiling covers every output pixel")
        })
    }
}

/// Runs one input through the plan's pyramid.
pub fn run_fused(
    net: &NetworkSpec,
    plan: &FusionPlan,
    weights: &NetWeights,
    input: &FeatureMap,
    opts: &SimOptions,
) -> Result<SimRun, SimError> {
    for lp in &plan.levels {
        if lp.layer >= net.layers.len() {
            return Err(SimError::PlanMismatch { layer: lp.layer, layers: net.layers.len() });
        }
    }
    let first = &net.layers[plan.levels[0].layer];
    if input.side() != first.ifm || input.channels() != first.n_in {
        return Err(SimError::ShapeMismatch {
            layer: plan.levels[0].layer,
            expected: (first.ifm, first.n_in),
            found: (input.side(), input.channels()),
        });
    }

    let kind = match opts.design {
        Design::Spatial => WpuKind::Spatial,
        Design::Temporal => WpuKind::Temporal,
    };
    let n = opts.params.n;

    // Per conv level: kernels[m][n_in], plus the level's fill cycles and
    // emission geometry. `emit` bakes in the full reduction-tree scale every
    // stored pixel must re-emit for payload precision; `extra` is the
    // smaller per-design drain the schedule charges beyond the payload (the
    // reused multiplier re-emits from its settled accumulator, so the
    // window tree's share never crosses the serial link).
    struct ConvCtx {
        kernels: Vec<Vec<Kernel>>,
        fill: u64,
        extra: u64,
        emit: Option<usize>,
        relu: bool,
    }
    let mut ctx: Vec<Option<ConvCtx>> = Vec::with_capacity(plan.levels.len());
    for lp in &plan.levels {
        let l = &net.layers[lp.layer];
        if l.kind != LayerKind::Conv {
            ctx.push(None);
            continue;
        }
        let w = weights.layers[lp.layer]
            .as_ref()
            .ok_or(SimError::MissingWeights { layer: lp.layer })?;
        let mut kernels = Vec::with_capacity(l.m_out);
        for m in 0..l.m_out {
            let mut per_ch = Vec::with_capacity(l.n_in);
            for c in 0..l.n_in {
                let ops = (0..l.k * l.k)
                    .map(|i| {
                        let ky = i / l.k;
                        let kx = i % l.k;
                        crate::msdf::ParallelOperand::new(
                            w.raw[w.index(m, c, ky, kx)],
                            w.frac_bits,
                        )
                    })
                    .collect::<Result<_, _>>()?;
                per_ch.push(Kernel::new(l.k, ops)?);
            }
            kernels.push(per_ch);
        }
        let (dk, dn) = cost::tree_depths(l);
        let scale = (dk + dn) as u64;
        ctx.push(Some(ConvCtx {
            kernels,
            fill: cost::conv_fill_cycles(opts.design, l, &opts.params),
            extra: cost::conv_extra_digits(opts.design, l),
            emit: match opts.emission {
                Emission::Quantized => Some(n as usize + scale as usize),
                Emission::Exact => None,
            },
            relu: l.relu,
        }));
    }

    let conv_levels = ctx.iter().flatten().count() as u64;
    let mut buffers: Vec<Grid> = plan
        .levels
        .iter()
        .map(|lp| {
            let l = &net.layers[lp.layer];
            Grid::empty(l.ofm().expect("validated layer"), l.m_out)
        })
        .collect();
    let input_grid = Grid::full(input);

    let mut report = SimReport { images: 1, ..SimReport::default() };

    for ty in 0..plan.alpha {
        for tx in 0..plan.alpha {
            let mut step_on_drain: u64 = 0;
            let mut step_on_drain_max: u64 = 0;
            let mut fills: u64 = 0;

            for (li, lp) in plan.levels.iter().enumerate() {
                let l = &net.layers[lp.layer];
                let (oy0, oy1, ox0, ox1) = match plan.levels.get(li + 1) {
                    Some(_) => {
                        let ys = plan.tile_indices(li + 1)[ty];
                        let xs = plan.tile_indices(li + 1)[tx];
                        (ys.0, ys.1, xs.0, xs.1)
                    }
                    None => {
                        let y0 = ty * plan.out_stride;
                        let x0 = tx * plan.out_stride;
                        (y0, y0 + plan.region, x0, x0 + plan.region)
                    }
                };
                let (before, rest) = buffers.split_at_mut(li);
                let src = if li == 0 { &input_grid } else { &before[li - 1] };
                let buf = &mut rest[0];

                match &ctx[li] {
                    Some(cc) => {
                        fills += cc.fill;
                        let full_len = (n + cc.extra as u32) as u64;
                        let mut level_ehat: u64 = 0;
                        for oy in oy0..oy1 {
                            for ox in ox0..ox1 {
                                if buf.get(0, oy, ox).is_some() {
                                    continue;
                                }
                                let windows =
                                    gather_windows(src, l.n_in, l.k, oy * l.s, ox * l.s, n, opts.emission)?;
                                for (m, per_ch) in cc.kernels.iter().enumerate() {
                                    let px = ppu_compute(&windows, per_ch, kind, cc.emit)?;
                                    let stored = if cc.relu { relu(px.value) } else { px.value };
                                    if stored.abs() >= fixed::ONE {
                                        return Err(SimError::ActivationOverflow {
                                            layer: lp.layer,
                                            channel: m,
                                            y: oy,
                                            x: ox,
                                            value: stored,
                                        });
                                    }
                                    report.conv_pixels += 1;
                                    report.digits_without_end += px.stream_len as u64;
                                    let consumed = if cc.relu {
                                        if matches!(px.status, EndStatus::Terminated { .. }) {
                                            report.terminated += 1;
                                        }
                                        px.consumed as u64
                                    } else {
                                        px.stream_len as u64
                                    };
                                    report.digits_with_end += consumed;
                                    level_ehat = level_ehat.max(consumed.min(full_len));
                                    buf.set(m, oy, ox, stored);
                                }
                            }
                        }
                        step_on_drain += level_ehat;
                        step_on_drain_max = step_on_drain_max.max(level_ehat);
                    }
                    None => {
                        fills += opts.params.mp;
                        for c in 0..l.n_in {
                            for oy in oy0..oy1 {
                                for ox in ox0..ox1 {
                                    if buf.get(c, oy, ox).is_some() {
                                        continue;
                                    }
                                    let mut best: Option<Fx> = None;
                                    for dy in 0..l.k {
                                        for dx in 0..l.k {
                                            let v = src
                                                .get(c, oy * l.s + dy, ox * l.s + dx)
                                                .expect("tiling provides every pool input");
                                            best = Some(best.map_or(v, |b| b.max(v)));
                                        }
                                    }
                                    buf.set(c, oy, ox, best.unwrap());
                                }
                            }
                        }
                    }
                }
            }

            report.steps += 1;
            let off_drain: u64 =
                ctx.iter().flatten().map(|c| c.extra).sum::<u64>() + n as u64;
            report.cycles_end_off += fills + off_drain;
            let on_drain = step_on_drain
                .saturating_sub(conv_levels.saturating_sub(1) * n as u64)
                .max(step_on_drain_max);
            report.cycles_end_on += fills + on_drain;
        }
    }

    let levels = buffers.iter().map(Grid::to_feature_map).collect();
    Ok(SimRun { levels, report })
}

/// Encodes the K x K window of every input channel at `(cy, cx)` origin.
/// Quantized inputs share the payload length; exact inputs share the widest
/// length the window needs.
fn gather_windows(
    src: &Grid,
    channels: usize,
    k: usize,
    cy: usize,
    cx: usize,
    n: u32,
    emission: Emission,
) -> Result<Vec<Window>, SimError> {
    let mut vals = Vec::with_capacity(channels * k * k);
    for c in 0..channels {
        for dy in 0..k {
            for dx in 0..k {
                vals.push(src.get(c, cy + dy, cx + dx).expect("tiling provides every window pixel"));
            }
        }
    }
    let len = match emission {
        Emission::Quantized => n,
        Emission::Exact => vals.iter().map(|v| v.frac_bits()).max().unwrap_or(1).max(1),
    };
    let mut windows = Vec::with_capacity(channels);
    for c in 0..channels {
        let pixels = vals[c * k * k..(c + 1) * k * k]
            .iter()
            .map(|v| DigitStream::encode_fixed(*v, len))
            .collect::<Result<Vec<_>, _>>()?;
        windows.push(Window::new(k, pixels)?);
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Fx;
    use crate::fixtures::tiny_two_conv;
    use crate::fusion::{plan, pyramid_levels};
    use crate::sim::reference::{random_input, reference_forward, NetWeights};

    fn setup(n: u32, seed: u64) -> (crate::net::NetworkSpec, FusionPlan, NetWeights, FeatureMap) {
        let net = tiny_two_conv();
        let p = plan(&net, 2, 1).unwrap();
        let w = NetWeights::generate(&net, n, seed, 0.0);
        let input = random_input(12, 1, n, seed ^ 0xabcd);
        (net, p, w, input)
    }

    #[test]
    fn exact_mode_matches_settled_arithmetic_bit_for_bit() {
        for design in [Design::Spatial, Design::Temporal] {
            let (net, p, w, input) = setup(8, 21);
            let opts = SimOptions { design, emission: Emission::Exact, ..SimOptions::default() };
            let run = run_fused(&net, &p, &w, &input, &opts).unwrap();
            let levels = pyramid_levels(&net, 2).unwrap();
            let refs = reference_forward(&net, &levels, &w, &input).unwrap();
            for (li, (got, want)) in run.levels.iter().zip(&refs).enumerate() {
                assert_eq!(got, want, "{design:?} level {li}");
            }
        }
    }

    #[test]
    fn quantized_mode_stays_within_the_truncation_bound() {
        for design in [Design::Spatial, Design::Temporal] {
            for seed in [1u64, 2, 3] {
                let n = 8u32;
                let (net, p, w, input) = setup(n, seed);
                let opts =
                    SimOptions { design, emission: Emission::Quantized, ..SimOptions::default() };
                let run = run_fused(&net, &p, &w, &input, &opts).unwrap();
                let levels = pyramid_levels(&net, 2).unwrap();
                let refs = reference_forward(&net, &levels, &w, &input).unwrap();
                // One truncation per conv level, each below 2^-n; pooling
                // and rectification never widen the gap.
                let diff = run.output().max_abs_diff(refs.last().unwrap());
                assert!(diff < Fx::pow2_neg(n - 1), "{design:?} seed {seed}: {diff}");
                let d0 = run.levels[0].max_abs_diff(&refs[0]);
                assert!(d0 < Fx::pow2_neg(n), "{design:?} seed {seed}: {d0}");
            }
        }
    }

    #[test]
    fn window_arrangements_agree_exactly_when_untruncated() {
        let (net, p, w, input) = setup(8, 33);
        let exact = |design| {
            let opts = SimOptions { design, emission: Emission::Exact, ..SimOptions::default() };
            run_fused(&net, &p, &w, &input, &opts).unwrap()
        };
        let a = exact(Design::Spatial);
        let b = exact(Design::Temporal);
        assert_eq!(a.levels, b.levels);
    }

    #[test]
    fn tiling_is_value_transparent() {
        // Same pyramid, three tiles per axis vs one full-map tile.
        let net = tiny_two_conv();
        let w = NetWeights::generate(&net, 8, 5, 0.0);
        let input = random_input(12, 1, 8, 17);
        let opts = SimOptions::default();
        let tiled = run_fused(&net, &plan(&net, 2, 1).unwrap(), &w, &input, &opts).unwrap();
        let whole = run_fused(&net, &plan(&net, 2, 3).unwrap(), &w, &input, &opts).unwrap();
        assert_eq!(tiled.levels, whole.levels);
        assert!(tiled.report.steps > whole.report.steps);
    }

    #[test]
    fn monitor_off_cycles_match_the_closed_form() {
        for design in [Design::Spatial, Design::Temporal] {
            let (net, p, w, input) = setup(8, 9);
            let opts = SimOptions { design, ..SimOptions::default() };
            let run = run_fused(&net, &p, &w, &input, &opts).unwrap();
            let formula = cost::cycles(&net, &p, design, &opts.params);
            assert_eq!(run.report.cycles_end_off, formula.total, "{design:?}");
        }
    }

    #[test]
    fn monitor_only_ever_helps() {
        for seed in 1..=5u64 {
            let (net, p, w, input) = setup(8, seed);
            let run = run_fused(&net, &p, &w, &input, &SimOptions::default()).unwrap();
            let r = &run.report;
            assert!(r.cycles_end_on <= r.cycles_end_off, "seed {seed}");
            assert!(r.digits_with_end <= r.digits_without_end);
            let s = r.end_savings();
            assert!((0.0..1.0).contains(&s), "seed {seed}: {s}");
            // Zero-mean weights drive roughly half the pixels negative.
            assert!(r.terminated > 0, "seed {seed}");
        }
    }

    #[test]
    fn reports_merge_by_summing() {
        let (net, p, w, input) = setup(8, 2);
        let run = run_fused(&net, &p, &w, &input, &SimOptions::default()).unwrap();
        let mut acc = run.report;
        acc.merge(&run.report);
        assert_eq!(acc.images, 2);
        assert_eq!(acc.conv_pixels, 2 * run.report.conv_pixels);
        assert_eq!(acc.end_savings(), run.report.end_savings());
    }

    #[test]
    fn oversized_weights_trip_the_overflow_check() {
        // Four weights of 3/4 over a 2x2 window of 3/4 inputs: the sum of
        // products is 9/4, unstorable in the (-1, 1) activation range.
        let net = crate::net::NetworkSpec::new(
            "hot",
            vec![crate::net::LayerSpec::conv(2, 1, 1, 1, 2, false)],
        )
        .unwrap();
        let w = NetWeights {
            layers: vec![Some(crate::sim::reference::LayerWeights {
                m_out: 1,
                n_in: 1,
                k: 2,
                frac_bits: 2,
                raw: vec![3, 3, 3, 3],
            })],
        };
        let p = plan(&net, 1, 1).unwrap();
        let input = FeatureMap::from_fn(2, 1, |_, _, _| Fx::from_fixed(3, 2));
        let opts = SimOptions { emission: Emission::Exact, ..SimOptions::default() };
        let err = run_fused(&net, &p, &w, &input, &opts).unwrap_err();
        assert!(matches!(err, SimError::ActivationOverflow { layer: 0, .. }), "{err}");
    }
}
