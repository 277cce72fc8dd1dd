//! Subcommand implementations. Each returns its output files in memory so the
//! caller can write and checksum them.

use seminorm_bounds::{
    assemble, complexity_g, corollary_bound, critical_radius, dual_oracle, fourier_exact, grid_oracle,
    mc_psi_concentration, q_set_boundary, sparse_periodic_linf_bound, tail_lambda_max_bound, two_by_two_f, BoundEngine,
    BoundKind, BoundReport, EigenSystem, Error as CoreError, QcqpInstance, SamplingOperator, TailMethod,
};

use crate::config::{BoundKindConfig, ExperimentConfig, FigureId};
use crate::error::CliError;
use crate::table::{float, opt_float, Table};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

pub struct Output {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn output(name: &str, table: Table) -> Result<Output, CliError> {
    Ok(Output { name: name.to_string(), bytes: table.into_bytes()? })
}

const BOUND_HEADER: [&str; 7] = ["epsilon", "value", "p_star", "t_star", "tail", "sigma_next", "kind"];

fn bound_row(r: &BoundReport<f64>) -> Vec<String> {
    vec![
        float(r.epsilon),
        float(r.value),
        r.p_star.to_string(),
        opt_float(r.t_star),
        float(r.tail),
        float(r.sigma_next),
        r.kind.name().to_string(),
    ]
}

fn fourier_row(eps: f64, sys: &EigenSystem<f64>, n: usize) -> Result<BoundReport<f64>, CliError> {
    Ok(BoundReport {
        value: fourier_exact(eps, sys, n).map_err(CliError::core("fourier_exact"))?,
        epsilon: eps,
        p_star: n,
        t_star: None,
        tail: 0.0,
        sigma_next: sys.sigma(n + 1).map_err(CliError::core("fourier_exact"))?,
        lambda_min: None,
        kind: BoundKind::FourierExact,
    })
}

pub fn bound(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Output>, CliError> {
    let sys = cfg.eigensystem.build()?;
    let op = cfg.operator(opts.seed)?;
    let n = op.dim();
    let eps = cfg.bound.grid().values("bound")?;
    let bcfg = cfg.bound.bound_config(n, opts.tolerance)?;
    let weak_p = cfg.bound.weak_p.unwrap_or(n.max(1));
    let mut table = Table::new(&BOUND_HEADER)?;
    let needs_engine = cfg.bound.kinds.iter().any(|k| !matches!(k, BoundKindConfig::FourierExact));
    let engine = if needs_engine && !eps.is_empty() {
        Some(BoundEngine::new(&sys, &op, &bcfg).map_err(CliError::core("bound"))?)
    } else {
        None
    };
    for &e in &eps {
        for kind in &cfg.bound.kinds {
            let report = match kind {
                BoundKindConfig::Strong => {
                    engine.as_ref().unwrap().strong(e).map_err(CliError::core("strong bound"))?
                }
                BoundKindConfig::Weak => {
                    engine.as_ref().unwrap().weak(e, weak_p).map_err(CliError::core("weak bound"))?
                }
                BoundKindConfig::FourierExact => fourier_row(e, &sys, n)?,
            };
            table.row(bound_row(&report))?;
        }
    }
    Ok(vec![output("bound.csv", table)?])
}

/// Slack allowed in the oracle sandwich.
const SANDWICH_SLACK: f64 = 1e-6;

pub fn oracle(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Output>, CliError> {
    let sys = cfg.eigensystem.build()?;
    let op = cfg.operator(opts.seed)?;
    let n = op.dim();
    let eps = cfg.oracle.grid().values("oracle")?;
    let trunc = cfg.oracle.truncation.unwrap_or(n + 10);
    let tol = opts.tolerance.or(cfg.oracle.tol).unwrap_or(1e-12);
    let bcfg = cfg.bound.bound_config(n, opts.tolerance)?;
    let mut table = Table::new(&["epsilon", "dual", "grid", "strong", "weak", "sandwich_ok"])?;
    if eps.is_empty() {
        return Ok(vec![output("oracle.csv", table)?]);
    }
    let base = QcqpInstance::from_operator(&op, &sys, trunc, 0.0).map_err(CliError::core("oracle instance"))?;
    let engine = BoundEngine::new(&sys, &op, &bcfg).map_err(CliError::core("bound"))?;
    let weak_p = cfg.bound.weak_p.unwrap_or(n.max(1));
    for &e in &eps {
        let inst = base.with_eps2(e * e).map_err(CliError::core("oracle instance"))?;
        let dual = dual_oracle(&inst, tol);
        let grid = if trunc <= 4 {
            Some(grid_oracle(&inst, cfg.oracle.grid_resolution).map_err(CliError::core("grid oracle"))?)
        } else {
            None
        };
        let strong = engine.strong(e).map_err(CliError::core("strong bound"))?.value;
        let weak = match engine.weak(e, weak_p) {
            Ok(r) => Some(r.value),
            Err(CoreError::Precondition(_)) => None,
            Err(err) => return Err(CliError::core("weak bound")(err)),
        };
        let ok = grid.is_none_or(|g| g <= dual + SANDWICH_SLACK)
            && dual <= strong + SANDWICH_SLACK
            && weak.is_none_or(|w| dual <= w + SANDWICH_SLACK);
        table.row([float(e), float(dual), opt_float(grid), float(strong), opt_float(weak), ok.to_string()])?;
    }
    Ok(vec![output("oracle.csv", table)?])
}

fn matrix_table(
    op: &SamplingOperator<f64>,
    sys: &EigenSystem<f64>,
    start: usize,
    end: usize,
) -> Result<(Table, seminorm_bounds::PsiBlock<f64>), CliError> {
    let block =
        assemble(op, sys, start, end, seminorm_bounds::linalg::MAX_DENSE_DIM).map_err(CliError::core("psi block"))?;
    let mut table = Table::new(&["row", "col", "value"])?;
    for j in start..=end {
        for k in start..=end {
            table.row([j.to_string(), k.to_string(), float(block.get(j, k))])?;
        }
    }
    Ok((table, block))
}

pub fn psi(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Output>, CliError> {
    let sys = cfg.eigensystem.build()?;
    let op = cfg.operator(opts.seed)?;
    let n = op.dim();
    let (start, end) = cfg.psi.range.unwrap_or((1, n.max(1)));
    if start == 0 || end < start {
        return Err(CliError::Config(format!("psi: invalid range [{start}, {end}]")));
    }
    let (block_table, block) = matrix_table(&op, &sys, start, end)?;
    let mut summary = Table::new(&["start", "end", "lambda_min", "lambda_max", "lambda_max_weighted"])?;
    summary.row([
        start.to_string(),
        end.to_string(),
        float(block.lambda_min()),
        float(block.lambda_max()),
        float(block.lambda_max_weighted(&sys)),
    ])?;
    let mut outputs = vec![output("psi_block.csv", block_table)?, output("psi_summary.csv", summary)?];

    let tail_p = if cfg.psi.tail_p.is_empty() { vec![n.max(1)] } else { cfg.psi.tail_p.clone() };
    let mut tails = Table::new(&["p", "method", "value", "horizon", "certified"])?;
    for &p in &tail_p {
        let horizon = cfg.psi.horizon.unwrap_or_else(|| seminorm_bounds::default_horizon(n)).max(p);
        let methods = [
            TailMethod::Trace,
            TailMethod::Linf,
            TailMethod::Block { size: cfg.psi.block_size.unwrap_or(n.max(1)) },
            TailMethod::TruncatedEig,
        ];
        for m in methods {
            let r = tail_lambda_max_bound(&op, &sys, p, m, horizon).map_err(CliError::core("tail bound"))?;
            tails.row([
                p.to_string(),
                m.name().to_string(),
                float(r.value),
                r.horizon.to_string(),
                r.certified.to_string(),
            ])?;
        }
    }
    outputs.push(output("psi_tail.csv", tails)?);

    if let Some(sp) = &cfg.psi.sparse_periodic {
        let mut t = Table::new(&["n", "c", "alpha", "bound"])?;
        for &m in &sp.n {
            let b = sparse_periodic_linf_bound(&sp.params(), sp.c, sp.alpha, m)
                .map_err(CliError::core("sparse periodic bound"))?;
            t.row([m.to_string(), float(sp.c), float(sp.alpha), float(b)])?;
        }
        outputs.push(output("psi_sparse_periodic.csv", t)?);
    }
    Ok(outputs)
}

fn boundary_table(inst: &QcqpInstance<f64>, samples: usize) -> Result<Table, CliError> {
    let mut t = Table::new(&["theta", "q2", "qphi"])?;
    for b in q_set_boundary(inst, samples).map_err(CliError::core("q-set boundary"))? {
        t.row([float(b.theta), float(b.q2), float(b.qphi)])?;
    }
    Ok(t)
}

pub fn figures(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Output>, CliError> {
    let sys = cfg.eigensystem.build()?;
    let fig = &cfg.figures;
    if fig.n == 0 {
        return Err(CliError::Config("figures: n must be at least 1".into()));
    }
    let mut outputs = Vec::new();
    for id in &fig.ids {
        let table = match id {
            FigureId::SpPer => {
                let op = SamplingOperator::uniform_grid(fig.n).map_err(CliError::core("sp_per"))?;
                matrix_table(&op, &sys, 1, 6 * fig.n)?.0
            }
            FigureId::GeomFourier => {
                let op = SamplingOperator::fourier_truncation(fig.n).map_err(CliError::core("geom_fourier"))?;
                let trunc = fig.truncation.unwrap_or(fig.n + 10);
                let inst =
                    QcqpInstance::from_operator(&op, &sys, trunc, 0.0).map_err(CliError::core("geom_fourier"))?;
                boundary_table(&inst, fig.samples)?
            }
            FigureId::ProofGeom => {
                let op = cfg.operator(opts.seed)?;
                let trunc = fig.truncation.unwrap_or((op.dim() + 10).min(seminorm_bounds::oracle::BOUNDARY_MAX_DIM));
                let inst = QcqpInstance::from_operator(&op, &sys, trunc, 0.0).map_err(CliError::core("proof_geom"))?;
                boundary_table(&inst, fig.samples)?
            }
            FigureId::Fig1 => {
                let mut t = Table::new(&["case", "u2", "v2", "a2", "d2", "eps2", "F"])?;
                let pts = fig.fig1_points.max(2);
                for (i, c) in fig.fig1_cases.iter().enumerate() {
                    let top = c.u2.max(c.v2);
                    for k in 0..pts {
                        let e2 = top * k as f64 / (pts - 1) as f64;
                        let f = two_by_two_f(c.u2, c.v2, c.a2, c.d2, e2).map_err(CliError::core("fig1"))?;
                        t.row([
                            (i + 1).to_string(),
                            float(c.u2),
                            float(c.v2),
                            float(c.a2),
                            float(c.d2),
                            float(e2),
                            float(f),
                        ])?;
                    }
                }
                t
            }
        };
        outputs.push(output(&format!("fig_{}.csv", id.name()), table)?);
    }
    Ok(outputs)
}

pub fn critical_radius_cmd(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Output>, CliError> {
    let sys = cfg.eigensystem.build()?;
    let tol = opts.tolerance.or(cfg.critical_radius.tol).unwrap_or(1e-12);
    let mut t = Table::new(&["n", "r_n", "r_n2", "g_at_r_n"])?;
    for &n in &cfg.critical_radius.n {
        if n == 0 {
            return Err(CliError::Config("critical_radius: n must be at least 1".into()));
        }
        let r = critical_radius(n, &sys, tol).map_err(CliError::core(format!("critical radius n={n}")))?;
        let g = complexity_g(n, &sys, r).map_err(CliError::core("complexity"))?;
        t.row([n.to_string(), float(r), float(r * r), float(g)])?;
    }
    Ok(vec![output("critical_radius.csv", t)?])
}

pub fn random(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Output>, CliError> {
    let sys = cfg.eigensystem.build()?;
    let rs = &cfg.random;
    let c_psi = match rs.c_psi.or_else(|| sys.c_psi()) {
        Some(c) => c,
        None => {
            return Err(CliError::Config("random: c_psi is required for eigensystems without eigenfunctions".into()))
        }
    };
    let factor = rs.eps2_factor.unwrap_or(2.0);
    if !(factor >= 1.0) {
        return Err(CliError::Config("random: eps2_factor must be >= 1".into()));
    }
    let mut report = Table::new(&[
        "n",
        "epsilon",
        "r_n2",
        "mu",
        "nu",
        "m_sigma",
        "c_sigma",
        "coeff",
        "threshold",
        "prob_bound",
        "precondition_ok",
    ])?;
    for &n in &rs.n {
        if n == 0 {
            return Err(CliError::Config("random: n must be at least 1".into()));
        }
        let r = critical_radius(n, &sys, 1e-12).map_err(CliError::core("critical radius"))?;
        let eps = (factor * r * r).sqrt();
        let rep = corollary_bound(n, &sys, c_psi, eps).map_err(CliError::core(format!("random report n={n}")))?;
        report.row([
            n.to_string(),
            float(rep.epsilon),
            float(rep.r_n2),
            rep.mu.to_string(),
            rep.nu.to_string(),
            rep.m_sigma.to_string(),
            float(rep.c_sigma),
            float(rep.coefficient),
            float(rep.threshold),
            float(rep.prob_bound),
            rep.precondition_ok.to_string(),
        ])?;
    }
    let mut outputs = vec![output("random_report.csv", report)?];
    if let Some(c) = &rs.concentration {
        let seed = opts.seed.unwrap_or(c.seed);
        let mut trials = Table::new(&["n", "trial", "norm", "exceed"])?;
        let mut summary = Table::new(&[
            "p",
            "n",
            "delta",
            "trials",
            "seed",
            "exceed",
            "empirical_freq",
            "lemma_bound",
            "std_err",
            "within_bound",
        ])?;
        for &n in &c.n {
            let rep = mc_psi_concentration(&sys, c.p, n, c.delta, c.trials, seed)
                .map_err(CliError::core(format!("concentration n={n}")))?;
            for (i, v) in rep.norms.iter().enumerate() {
                trials.row([n.to_string(), i.to_string(), float(*v), (*v > c.delta).to_string()])?;
            }
            summary.row([
                c.p.to_string(),
                n.to_string(),
                float(c.delta),
                c.trials.to_string(),
                seed.to_string(),
                rep.exceed.to_string(),
                float(rep.empirical_freq),
                float(rep.lemma_bound),
                float(rep.std_err),
                rep.within_bound().to_string(),
            ])?;
        }
        outputs.push(output("concentration.csv", trials)?);
        outputs.push(output("concentration_summary.csv", summary)?);
    }
    Ok(outputs)
}
