use rand::Rng;

use super::{choice_log_mass, draw, repair, repair_reverse_mass};
use crate::engine::{ChainRng, ChildGraph, EngineError, Problem, ProposalCtx, Proposer};
use crate::model::evaluate_dependency;
use crate::world::{log_prob, PartialWorld, WorldPatch, WorldState};

/// Picks one instantiated non-evidence variable uniformly, redraws it from
/// its dependency given the rest of the state, and forward-samples whatever
/// the new value makes necessary.
#[derive(Clone, Debug)]
pub struct GenericResampler {
    identifiers: bool,
    init_attempts: usize,
}

impl Default for GenericResampler {
    fn default() -> Self {
        GenericResampler {
            identifiers: true,
            init_attempts: 10_000,
        }
    }
}

impl GenericResampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Represent non-guaranteed objects by numbered objects instead of
    /// identifiers.
    pub fn numbered(mut self) -> Self {
        self.identifiers = false;
        self
    }

    pub fn uses_identifiers(&self) -> bool {
        self.identifiers
    }
}

/// Forward-samples a state consistent with the evidence, retrying until it
/// has positive probability.
pub(crate) fn sample_initial(
    problem: &Problem<'_>,
    identifiers: bool,
    attempts: usize,
    rng: &mut ChainRng,
) -> Result<PartialWorld, EngineError> {
    let model = problem.model;
    let graph = ChildGraph::default();
    let mut last = String::from("no attempts made");
    for _ in 0..attempts {
        let mut w = PartialWorld::new();
        if identifiers {
            for ty in model.user_types() {
                if model.number_statement(ty).is_some() {
                    w.set_identifier_mode(ty);
                }
            }
        }
        let mut patch = WorldPatch::new();
        {
            let mut ctx = ProposalCtx::new(problem, &w, &graph, &mut patch);
            for (v, val) in &problem.evidence {
                ctx.set(v.clone(), val.clone());
            }
            repair(&mut ctx, rng)?;
            ctx.analysis()?.check(model)?;
        }
        patch.apply(&mut w);
        match log_prob(model, &w) {
            Ok(lp) if lp.is_finite() => return Ok(w),
            Ok(_) => last = "sampled state contradicts the evidence".into(),
            Err(e) => last = e.to_string(),
        }
    }
    Err(EngineError::Initial(format!("{last} after {attempts} attempts")))
}

impl Proposer for GenericResampler {
    fn initial_state(&mut self, problem: &Problem<'_>, rng: &mut ChainRng) -> Result<PartialWorld, EngineError> {
        sample_initial(problem, self.identifiers, self.init_attempts, rng)
    }

    fn propose(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
        let base = ctx.base;
        let n_evidence = ctx.problem.evidence.len();
        let choices = base.len() - n_evidence;
        if choices == 0 {
            return Err(EngineError::Config("no variable to resample".into()));
        }
        let var = loop {
            let (v, _) = base.get_index(rng.gen_range(0..base.len())).unwrap();
            if !ctx.problem.is_evidence(v) {
                break v.clone();
            }
        };
        let old = base.get(&var).cloned().unwrap();
        let dist = evaluate_dependency(ctx.model(), base, &var)?
            .dist
            .ok_or_else(|| EngineError::Contract(format!("{} is unsupported", ctx.model().show_var(&var))))?;
        let (new, fwd_value) = draw(ctx, &dist, Some(&old), true, rng);
        ctx.set(var.clone(), new.clone());
        let fwd_repair = repair(ctx, rng)?;
        let back_choices = ctx.world().len() - n_evidence;
        let back_value = choice_log_mass(ctx, &dist, &old, Some(&new), true);
        let back_repair = repair_reverse_mass(ctx)?;
        let fwd = -(choices as f64).ln() + fwd_value + fwd_repair;
        let back = -(back_choices as f64).ln() + back_value + back_repair;
        Ok(back - fwd)
    }
}
