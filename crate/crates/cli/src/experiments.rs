use crate::config::{Experiment, ExperimentConfig, GeometryKind};
use crate::report::{Quantity, VerificationRecord};
use num_rational::Ratio;
use oddindex_core::boundary::{hw_equivalence_check, verify_theorem_b_with_fd, BoundaryProblem};
use oddindex_core::geometries::{
    abstract_even_model, circle_dirac, disjoint_union, product_circle, sphere_monopole_model, torus_flat_model,
    DiracModel, EvenModel,
};
use oddindex_core::involution::{build_lift, verify_theorem_a, TheoremAReport};
use oddindex_core::linop::{commutant_dimension, random_exact_diagram, snake_additivity_check, IndexReport};
use oddindex_core::{Result, Sign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const ANCHOR_A: &str = "fixed-point-index-formula";
const ANCHOR_HEAT: &str = "lefschetz-heat-supertrace";
const ANCHOR_B: &str = "mixed-boundary-index";
const ANCHOR_HW: &str = "twisted-boundary-equivalence";
const ANCHOR_SNAKE: &str = "snake-additivity";
const ANCHOR_COMMUTANT: &str = "commutant-locally-constant";
const ANCHOR_LIFT: &str = "lift-sign-per-component";

/// Circle cutoffs always checked by the full suite.
pub const CIRCLE_CUTOFFS: [usize; 5] = [1, 2, 4, 8, 16];

/// Even fiber selected by `--geometry`; `circle` means the point fiber.
pub fn fiber_from_config(cfg: &ExperimentConfig) -> Result<EvenModel> {
    match cfg.geometry {
        GeometryKind::Circle | GeometryKind::Point => Ok(EvenModel::point()),
        GeometryKind::Abstract => abstract_even_model(2, 2, cfg.d, cfg.seed),
        GeometryKind::Torus => torus_flat_model(cfg.fiber_cutoff),
        GeometryKind::Monopole => sphere_monopole_model(cfg.charge, cfg.charge.unsigned_abs() as usize + 1),
    }
}

/// The fixture fibers: abstract `d ∈ −3..3` over five seeds, the flat torus
/// and monopoles of charge `−2..2`.
pub fn fixture_fibers(cfg: &ExperimentConfig) -> Result<Vec<EvenModel>> {
    let mut out = Vec::new();
    for seed in cfg.seed..cfg.seed + 5 {
        for d in -3..=3 {
            out.push(abstract_even_model(2, 2, d, seed)?);
        }
    }
    out.push(torus_flat_model(cfg.fiber_cutoff)?);
    for q in -2i64..=2 {
        out.push(sphere_monopole_model(q, q.unsigned_abs() as usize + 1)?);
    }
    Ok(out)
}

fn ratio_quantity(r: Ratio<i64>) -> Quantity {
    if r.is_integer() {
        Quantity::Integer(r.to_integer())
    } else {
        Quantity::Text(format!("{}/{}", r.numer(), r.denom()))
    }
}

fn with_gap(rec: VerificationRecord, r: &IndexReport) -> VerificationRecord {
    rec.diag("sigma_max", r.sigma_max)
        .diag("sigma_min_nonzero", r.sigma_min_nonzero)
        .diag("threshold", r.threshold_used)
        .diag("dim_ker", r.dim_ker as f64)
        .diag("dim_coker", r.dim_coker as f64)
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    records: Vec<VerificationRecord>,
}

impl Runner<'_> {
    fn push(&mut self, rec: VerificationRecord, started: Instant) {
        let rec = if self.cfg.timings {
            rec.diag("time_s", started.elapsed().as_secs_f64())
        } else {
            rec
        };
        self.records.push(rec);
    }

    fn theorem_a(&mut self, name: &str, model: &DiracModel, heat: bool) -> Result<()> {
        let started = Instant::now();
        let r: TheoremAReport = verify_theorem_a(model, self.cfg.tol_rank)?;
        let rec = VerificationRecord::new(
            format!("theorem-a/{name}"),
            ANCHOR_A,
            Quantity::Integer(r.lhs.index),
            ratio_quantity(r.rhs_total),
            r.matches,
            self.cfg.seed,
        )
        .diag("lefschetz_exact", r.lefschetz_exact);
        self.push(with_gap(rec, &r.lhs), started);
        if heat {
            let target = 2 * r.lhs.index;
            for (t, h) in &r.lefschetz_heat {
                let residual = (h - target as f64).abs();
                let rec = VerificationRecord::new(
                    format!("lefschetz-heat/{name}/t={t}"),
                    ANCHOR_HEAT,
                    Quantity::Real(*h),
                    Quantity::Integer(target),
                    residual < self.cfg.tol_consistency,
                    self.cfg.seed,
                )
                .diag("t", *t)
                .diag("residual", residual);
                self.push(rec, started);
            }
        }
        Ok(())
    }

    fn theorem_b(&mut self, name: &str, prob: &BoundaryProblem) -> Result<()> {
        let started = Instant::now();
        let r = verify_theorem_b_with_fd(prob, self.cfg.grid, self.cfg.tol_rank)?;
        let pattern: String = prob
            .cylinders
            .iter()
            .flat_map(|c| [c.start.epsilon.symbol(), c.end.epsilon.symbol()])
            .collect();
        let mut rec = VerificationRecord::new(
            format!("theorem-b/{name}/eps={pattern}"),
            ANCHOR_B,
            Quantity::Integer(r.lhs.index),
            Quantity::Integer(r.rhs_minus_sum),
            r.matches,
            self.cfg.seed,
        )
        .diag("rhs_plus_sum", r.rhs_plus_sum as f64);
        if let (Some(fd), Some(agrees)) = (&r.fd, r.fd_agrees) {
            rec = rec
                .diag("fd_index", fd.index as f64)
                .diag("fd_agrees", if agrees { 1.0 } else { 0.0 });
        }
        self.push(with_gap(rec, &r.lhs), started);
        Ok(())
    }

    fn theorem_b_four(&mut self, y: &EvenModel) -> Result<()> {
        for (e0, e1) in [(Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Plus), (Sign::Plus, Sign::Plus), (Sign::Minus, Sign::Minus)] {
            let prob = BoundaryProblem::new(vec![y.clone()], &[self.cfg.length], &[(e0, e1)])?;
            self.theorem_b(&y.label.to_string(), &prob)?;
        }
        Ok(())
    }

    fn theorem_b_two_cylinders(&mut self) -> Result<()> {
        let y1 = abstract_even_model(2, 2, 1, self.cfg.seed)?;
        let y2 = abstract_even_model(2, 2, 2, self.cfg.seed)?;
        for bits in 0..16u32 {
            let s = |k: u32| if bits >> k & 1 == 0 { Sign::Plus } else { Sign::Minus };
            let prob = BoundaryProblem::new(
                vec![y1.clone(), y2.clone()],
                &[self.cfg.length, self.cfg.length],
                &[(s(0), s(1)), (s(2), s(3))],
            )?;
            self.theorem_b("two-cylinders(d=1,2)", &prob)?;
        }
        Ok(())
    }

    fn hw(&mut self, y: &EvenModel) -> Result<()> {
        let started = Instant::now();
        let r = hw_equivalence_check(y, self.cfg.cutoff, self.cfg.tol_rank)?;
        let rec = VerificationRecord::new(
            format!("hw-equivalence/{}", y.label),
            ANCHOR_HW,
            Quantity::Integer(r.index_twisted),
            Quantity::Integer(r.index_boundary),
            r.equal,
            self.cfg.seed,
        );
        self.push(rec, started);
        Ok(())
    }

    fn snake(&mut self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        for trial in 0..self.cfg.trials as u64 {
            let started = Instant::now();
            let v: Vec<usize> = (0..4).map(|_| rng.gen_range(0..=5)).collect();
            let dims = [v[0], v[0] + v[1], v[1], v[2], v[2] + v[3], v[3]];
            let seed = self.cfg.seed.wrapping_add(trial);
            let diag = random_exact_diagram(dims, seed)?;
            let r = snake_additivity_check(&diag, self.cfg.tol_rank)?;
            let rec = VerificationRecord::new(
                format!("snake-lemma/{trial}"),
                ANCHOR_SNAKE,
                Quantity::Integer(r.index_t),
                Quantity::Integer(r.index_t_sub + r.index_t_quot),
                r.holds,
                seed,
            )
            .diag("dim_total", dims.iter().sum::<usize>() as f64);
            self.push(rec, started);
        }
        Ok(())
    }

    fn commutant(&mut self) -> Result<()> {
        let k = self.cfg.cutoff;
        let one = circle_dirac(k)?;
        let two = disjoint_union(&[circle_dirac(k)?, circle_dirac(k.div_ceil(2))?])?;
        for (name, model) in [("circle", &one), ("two-circles", &two)] {
            let started = Instant::now();
            let dim = commutant_dimension(&model.matrix, &model.collocation_structure()?, self.cfg.tol_rank)?;
            let components = model.components.len() as i64;
            let rec = VerificationRecord::new(
                format!("commutant/{name}"),
                ANCHOR_COMMUTANT,
                Quantity::Integer(dim as i64),
                Quantity::Integer(components),
                dim as i64 == components,
                self.cfg.seed,
            );
            self.push(rec, started);
        }

        let started = Instant::now();
        let plus = build_lift(&two, &[Sign::Plus, Sign::Plus])?;
        let mixed = build_lift(&two, &[Sign::Plus, Sign::Minus])?;
        let mut defect = 0.0f64;
        for (c, flipped) in plus.components.iter().zip([false, true]) {
            let a = plus.matrix.select_rows(c).select_columns(c);
            let b = mixed.matrix.select_rows(c).select_columns(c);
            defect = defect.max(if flipped { (&a + &b).norm() } else { (&a - &b).norm() });
        }
        let outside = {
            let mut m = &plus.matrix - &mixed.matrix;
            for c in &plus.components {
                for &i in c {
                    for &j in c {
                        m[(i, j)] = Default::default();
                    }
                }
            }
            m.norm()
        };
        let rec = VerificationRecord::new(
            "commutant/lift-signs",
            ANCHOR_LIFT,
            Quantity::Real(defect.max(outside)),
            Quantity::Real(0.0),
            defect == 0.0 && outside == 0.0,
            self.cfg.seed,
        );
        self.push(rec, started);
        Ok(())
    }
}

fn model_for_theorem_a(cfg: &ExperimentConfig) -> Result<(String, DiracModel)> {
    match cfg.geometry {
        GeometryKind::Circle => Ok((format!("circle/K={}", cfg.cutoff), circle_dirac(cfg.cutoff)?)),
        _ => {
            let y = fiber_from_config(cfg)?;
            Ok((format!("{}/K={}", y.label, cfg.cutoff), product_circle(&y, cfg.cutoff)?))
        }
    }
}

/// Run the configured experiment; records come out in a fixed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<VerificationRecord>> {
    let mut run = Runner {
        cfg,
        records: Vec::new(),
    };
    match cfg.experiment {
        Experiment::TheoremA | Experiment::LefschetzHeat => {
            let (name, model) = model_for_theorem_a(cfg)?;
            let heat = cfg.experiment == Experiment::LefschetzHeat;
            run.theorem_a(&name, &model, heat)?;
            if heat {
                run.records.remove(0);
            }
        }
        Experiment::TheoremB => run.theorem_b_four(&fiber_from_config(cfg)?)?,
        Experiment::HwEquivalence => run.hw(&fiber_from_config(cfg)?)?,
        Experiment::SnakeLemma => run.snake()?,
        Experiment::Commutant => run.commutant()?,
        Experiment::FullSuite => {
            for k in CIRCLE_CUTOFFS {
                run.theorem_a(&format!("circle/K={k}"), &circle_dirac(k)?, true)?;
            }
            let fibers = fixture_fibers(cfg)?;
            for y in &fibers {
                run.theorem_a(&format!("{}/K={}", y.label, cfg.cutoff), &product_circle(y, cfg.cutoff)?, true)?;
            }
            run.commutant()?;
            for d in -3..=3 {
                run.theorem_b_four(&abstract_even_model(2, 2, d, cfg.seed)?)?;
            }
            run.theorem_b_four(&torus_flat_model(cfg.fiber_cutoff)?)?;
            run.theorem_b_two_cylinders()?;
            for y in &fibers {
                run.hw(y)?;
            }
            run.snake()?;
        }
    }
    Ok(run.records)
}
