//! Builds charts, windows, coverings, partitions, weights and signals from a config.

use num_complex::Complex64;
use orbitlets_core::bapu::{base_set_for, BapuFamily, QuadSpec};
use orbitlets_core::covering::{IndexWindow, InducedCovering, WellSpreadFamily};
use orbitlets_core::decomp::grid::FrequencyGrid;
use orbitlets_core::decomp::norm::default_grid;
use orbitlets_core::decomp::signal::{Atom, BandlimitedSignal, SignalFamily};
use orbitlets_core::group::{ChartKind, GroupChart};
use orbitlets_core::linalg::{Mat2, Vec2};
use orbitlets_core::weights::{discretize, DiscretizedWeight, WeightSpec};
use orbitlets_core::window::{checked_window, AnalyticWindow, Profile};

use crate::config::{Config, ConfigError, ConfigResult};

pub fn chart_kind(cfg: &Config) -> ConfigResult<ChartKind> {
    cfg.str("group")?.parse::<ChartKind>().map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Fills the chart-dependent defaults shared by every scenario.
pub fn common_defaults(cfg: &mut Config) -> ConfigResult<()> {
    cfg.set_default("group", "similitude2d");
    let kind = chart_kind(cfg)?;
    cfg.set_default("seed", 7);
    cfg.set_default("quad.nodes", orbitlets_core::bapu::DEFAULT_NODES_PER_CELL as i64);
    cfg.set_default("quad.levels", 3);
    cfg.set_default("quad.coorbit_nodes", 64);
    cfg.set_default("grid.n", 0);
    cfg.set_default("grid.extent", 0.0);
    cfg.set_default("window.kind", "bump");
    let (c, r) = match kind {
        ChartKind::Dyadic1d | ChartKind::Similitude2d => ([1.0, 0.0], 0.5),
        ChartKind::Shearlet2d => ([3.0, 3.0], 0.5),
    };
    cfg.set_default("window.center", toml::Value::Array(c.iter().map(|&x| toml::Value::Float(x)).collect()));
    cfg.set_default("window.radius", r);
    cfg.set_default("window.inner", 0.5);
    cfg.set_default("window.off_orbit", false);
    match kind {
        ChartKind::Dyadic1d | ChartKind::Similitude2d => cfg.set_default("index.k", int_pair(-6, 6)),
        ChartKind::Shearlet2d => {
            cfg.set_default("index.j", int_pair(-1, 3));
            cfg.set_default("index.k", int_pair(-8, 8));
        }
    }
    cfg.set_default("weight.det_exponent", 0.0);
    cfg.set_default("weight.norm_exponents", float_pair(0.0, 0.0));
    cfg.set_default("p", 2.0);
    cfg.set_default("q", 2.0);
    cfg.set_default("tolerance", 0.0);
    Ok(())
}

pub fn int_pair(a: i64, b: i64) -> toml::Value {
    toml::Value::Array(vec![toml::Value::Integer(a), toml::Value::Integer(b)])
}

pub fn float_pair(a: f64, b: f64) -> toml::Value {
    toml::Value::Array(vec![toml::Value::Float(a), toml::Value::Float(b)])
}

pub fn float_list(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect())
}

pub fn pair_list(v: &[[f64; 2]]) -> toml::Value {
    toml::Value::Array(v.iter().map(|p| float_pair(p[0], p[1])).collect())
}

/// The resolved tolerance: the configured one, or the scenario default when 0.
pub fn tolerance(cfg: &Config, default: f64) -> ConfigResult<f64> {
    let t = cfg.float("tolerance")?;
    Ok(if t > 0.0 { t } else { default })
}

pub fn chart(cfg: &Config) -> ConfigResult<GroupChart> {
    Ok(GroupChart::new(chart_kind(cfg)?))
}

pub fn quad(cfg: &Config) -> ConfigResult<QuadSpec> {
    let n = cfg.usize("quad.nodes")?;
    if n == 0 {
        return Err(ConfigError::Invalid("`quad.nodes` must be positive".into()));
    }
    Ok(QuadSpec::with_nodes(n))
}

pub fn coorbit_quad(cfg: &Config) -> ConfigResult<QuadSpec> {
    let n = cfg.usize("quad.coorbit_nodes")?;
    if n == 0 {
        return Err(ConfigError::Invalid("`quad.coorbit_nodes` must be positive".into()));
    }
    Ok(QuadSpec::with_nodes(n))
}

/// The configured grid (`grid.n`, `grid.extent`, centered on supp f_hat) or the default one.
pub fn grid_for(cfg: &Config, f: &BandlimitedSignal) -> anyhow::Result<FrequencyGrid> {
    let g = default_grid(f)?;
    let n = cfg.usize("grid.n")?;
    let e = cfg.float("grid.extent")?;
    if n == 0 && e <= 0.0 {
        return Ok(g);
    }
    let n = if n == 0 { g.n } else { n };
    let e = if e > 0.0 { e } else { g.extent };
    Ok(FrequencyGrid::centered(f.dim, n, e, Vec2::new(g.center[0], g.center[1]))?)
}

pub fn exponents(cfg: &Config) -> ConfigResult<(f64, f64)> {
    let (p, q) = (cfg.float("p")?, cfg.float("q")?);
    if !(p >= 1.0 && q >= 1.0) {
        return Err(ConfigError::Invalid(format!("exponents must satisfy p, q >= 1 (got p = {p}, q = {q})")));
    }
    Ok((p, q))
}

pub fn window(cfg: &Config, chart: &GroupChart) -> anyhow::Result<AnalyticWindow> {
    let c = cfg.pair("window.center")?;
    let r = cfg.float("window.radius")?;
    if !(r > 0.0) {
        return Err(ConfigError::Invalid(format!("`window.radius` must be positive, got {r}")).into());
    }
    let profile = match cfg.str("window.kind")?.as_str() {
        "bump" => Profile::Bump,
        "plateau" => {
            let inner = cfg.float("window.inner")?;
            if !(inner > 0.0 && inner < 1.0) {
                return Err(ConfigError::Invalid(format!("`window.inner` must lie in (0, 1), got {inner}")).into());
            }
            Profile::Plateau { inner }
        }
        other => return Err(ConfigError::Invalid(format!("`window.kind` must be bump or plateau, got `{other}`")).into()),
    };
    let w = AnalyticWindow::ball(chart.dim(), Vec2::new(c[0], if chart.dim() == 1 { 0.0 } else { c[1] }), r, profile);
    Ok(checked_window(w, chart, cfg.bool("window.off_orbit")?)?)
}

pub fn index_window(cfg: &Config, kind: ChartKind) -> ConfigResult<IndexWindow> {
    let k = cfg.int_pair("index.k")?;
    Ok(match kind {
        ChartKind::Shearlet2d => IndexWindow::rect(cfg.int_pair("index.j")?, k),
        _ => IndexWindow::scales(k.0, k.1),
    })
}

pub fn weight(cfg: &Config) -> ConfigResult<WeightSpec> {
    let t = cfg.pair("weight.norm_exponents")?;
    Ok(WeightSpec::new(cfg.float("weight.det_exponent")?, t[0], t[1]))
}

/// Covering and partition over an explicit index window.
pub fn bapu_over(window: &AnalyticWindow, chart: &GroupChart, idx: IndexWindow, spec: QuadSpec) -> anyhow::Result<BapuFamily> {
    let family = WellSpreadFamily::new(chart.clone(), idx);
    let q = base_set_for(window, &family)?;
    let cov = InducedCovering::build(family, q, None)?;
    Ok(BapuFamily::build(window, &cov, spec)?)
}

pub fn bapu(cfg: &Config) -> anyhow::Result<(GroupChart, AnalyticWindow, BapuFamily)> {
    let chart = chart(cfg)?;
    let w = window(cfg, &chart)?;
    let b = bapu_over(&w, &chart, index_window(cfg, chart.kind)?, quad(cfg)?)?;
    Ok((chart, w, b))
}

pub fn decomp_weights(v: &WeightSpec, bapu: &BapuFamily, q: f64) -> anyhow::Result<DiscretizedWeight> {
    Ok(discretize(v, &bapu.covering, q)?)
}

/// Default anchors of the random families: points well inside each chart's orbit.
pub fn default_anchors(kind: ChartKind) -> Vec<[f64; 2]> {
    match kind {
        ChartKind::Dyadic1d => vec![[1.2, 0.0], [-2.0, 0.0], [3.5, 0.0]],
        ChartKind::Similitude2d => vec![[1.2, 0.6], [-2.0, 1.0], [0.6, -2.4]],
        ChartKind::Shearlet2d => vec![[2.0, 1.0], [1.5, -1.5], [-2.5, 1.0]],
    }
}

pub fn family_defaults(cfg: &mut Config, count: i64) -> ConfigResult<()> {
    let kind = chart_kind(cfg)?;
    cfg.set_default("family.count", count);
    cfg.set_default("family.radius", float_pair(0.3, 0.6));
    cfg.set_default("family.jitter", 0.3);
    cfg.set_default("family.shift", 1.0);
    cfg.set_default("family.anchors", pair_list(&default_anchors(kind)));
    Ok(())
}

/// Families run many decomposition norms; 128 points per axis in 2-D keeps them
/// within about 1e-5 of the 512-point grid.
pub fn family_grid_default(cfg: &mut Config) -> ConfigResult<()> {
    if chart_kind(cfg)? != ChartKind::Dyadic1d && cfg.usize("grid.n")? == 0 {
        cfg.set("grid.n", 128);
    }
    Ok(())
}

/// The seeded random family of the config, keeping only members accepted by `keep`.
pub fn family(cfg: &Config, chart: &GroupChart, keep: impl Fn(&BandlimitedSignal) -> bool) -> anyhow::Result<Vec<BandlimitedSignal>> {
    let count = cfg.usize("family.count")?;
    let fam = SignalFamily {
        dim: chart.dim(),
        anchors: cfg.pairs("family.anchors")?.iter().map(|a| Vec2::new(a[0], a[1])).collect(),
        jitter: cfg.float("family.jitter")?,
        radius: {
            let r = cfg.pair("family.radius")?;
            (r[0], r[1])
        },
        max_shift: cfg.float("family.shift")?,
    };
    if fam.anchors.is_empty() {
        return Err(ConfigError::Invalid("`family.anchors` must not be empty".into()).into());
    }
    let seed = cfg.int("seed")? as u64;
    let mut out = Vec::new();
    let mut round = 0u64;
    while out.len() < count {
        if round > 64 {
            anyhow::bail!("only {} of {count} random functions satisfy the scenario's support constraints", out.len());
        }
        for f in fam.generate(count, seed.wrapping_add(1000 * round), chart) {
            if out.len() < count && keep(&f) {
                out.push(f);
            }
        }
        round += 1;
    }
    Ok(out)
}

/// True when every support sample of f is truncation-safe for the partition.
pub fn fits_window(f: &BandlimitedSignal, bapu: &BapuFamily) -> bool {
    f.support_samples(6).iter().all(|xi| bapu.eval_all(xi).1)
}

/// The explicit input signal (`signal.*` keys), or a single bump inside the window's
/// reach when absent.
pub fn signal(cfg: &Config, chart: &GroupChart) -> anyhow::Result<BandlimitedSignal> {
    let dim = chart.dim();
    if !cfg.contains("signal.centers") {
        let a = default_anchors(chart.kind)[0];
        let w = AnalyticWindow::ball(dim, Vec2::new(a[0], a[1]), 0.4, Profile::Bump);
        return Ok(BandlimitedSignal::from_window(&w));
    }
    let centers = cfg.pairs("signal.centers")?;
    let n = centers.len();
    let radii = if cfg.contains("signal.radii") { cfg.floats("signal.radii")? } else { vec![0.4; n] };
    let coeffs = if cfg.contains("signal.coeffs") { cfg.pairs("signal.coeffs")? } else { vec![[1.0, 0.0]; n] };
    let shifts = if cfg.contains("signal.shifts") { cfg.pairs("signal.shifts")? } else { vec![[0.0, 0.0]; n] };
    if radii.len() != n || coeffs.len() != n || shifts.len() != n {
        return Err(ConfigError::Invalid("`signal.*` lists must all have the length of `signal.centers`".into()).into());
    }
    let mut atoms = Vec::with_capacity(n);
    for k in 0..n {
        if !(radii[k] > 0.0) {
            return Err(ConfigError::Invalid(format!("signal radius {k} must be positive")).into());
        }
        let y = if dim == 1 { 0.0 } else { 1.0 };
        let w = AnalyticWindow::ball(dim, Vec2::new(centers[k][0], centers[k][1] * y), radii[k], Profile::Bump);
        atoms.push(Atom::new(w, Complex64::new(coeffs[k][0], coeffs[k][1]), Vec2::new(shifts[k][0], shifts[k][1] * y)));
    }
    let f = BandlimitedSignal::new(dim, atoms);
    if f.is_zero() {
        return Err(ConfigError::Invalid("the input signal is zero".into()).into());
    }
    Ok(f)
}

pub fn matrix(cfg: &Config, key: &str) -> ConfigResult<Mat2> {
    let v = cfg.floats(key)?;
    if v.len() != 4 {
        return Err(ConfigError::Invalid(format!("`{key}` must list the four entries of a 2x2 matrix")));
    }
    let m = Mat2::new(v[0], v[1], v[2], v[3]);
    if m.determinant().abs() < 1e-12 {
        return Err(ConfigError::Invalid(format!("`{key}` must be invertible")));
    }
    Ok(m)
}
