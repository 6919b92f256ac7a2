use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{DistributionSpec, Facilities, Instance, MultimodalParams, NormalParams, ProblemClass, ScenarioSet};
use crate::error::{Error, Result};
use crate::rng::{substream, StreamRng};

/// Generates an instance; a pure function of its arguments.
///
/// SEL/VC costs are integers in `{1..100}` under the uniform family. VC graphs
/// are Erdős–Rényi with edge probability `min(1, 10/n)`. CFLP parameters are
/// real-valued: fixed costs in `[100, 1000]`, unit capacity costs in
/// `[10, 100]`, capacities in `[200, 700]`, transport costs in `[1, 1000]` and
/// demands in `[10, 500]`.
pub fn generate_instance(
    class: ProblemClass,
    n: usize,
    m: Option<usize>,
    num_scenarios: usize,
    dist: &DistributionSpec,
    seed: u64,
) -> Result<Instance> {
    if n < 2 {
        return Err(Error::param(format!("n must be at least 2, got {n}")));
    }
    if num_scenarios == 0 {
        return Err(Error::param("at least one scenario is required"));
    }
    match (class, m) {
        (ProblemClass::FacilityLocation, None | Some(0)) => {
            return Err(Error::param("CFLP requires m >= 1 facilities"));
        }
        (ProblemClass::Selection | ProblemClass::VertexCover, Some(_)) => {
            return Err(Error::param(format!("{class} does not take a facility count")));
        }
        _ => {}
    }
    dist.validate_for(class)?;

    let scenarios = ScenarioSet::new(sample_scenarios(class, n, num_scenarios, dist, seed))?;
    let instance = match class {
        ProblemClass::Selection | ProblemClass::VertexCover => {
            let mut rng = substream(seed, "first_stage_cost");
            let first_stage_cost = (0..n).map(|_| f64::from(rng.gen_range(1u32..=100))).collect();
            let edges = if class == ProblemClass::VertexCover {
                erdos_renyi_edges(n, &mut substream(seed, "edges"))
            } else {
                Vec::new()
            };
            Instance {
                class,
                n,
                first_stage_cost,
                edges,
                facilities: None,
                scenarios,
                seed,
                dist: dist.clone(),
            }
        }
        ProblemClass::FacilityLocation => {
            let m = m.unwrap_or_default();
            let uniform_vec = |tag: &str, lo: f64, hi: f64, len: usize| -> Vec<f64> {
                let mut rng = substream(seed, tag);
                (0..len).map(|_| rng.gen_range(lo..=hi)).collect()
            };
            let mut transport_rng = substream(seed, "transport_cost");
            let transport_cost = (0..n)
                .map(|_| (0..m).map(|_| transport_rng.gen_range(1.0..=1000.0)).collect())
                .collect();
            Instance {
                class,
                n,
                first_stage_cost: Vec::new(),
                edges: Vec::new(),
                facilities: Some(Facilities {
                    fixed_cost: uniform_vec("fixed_cost", 100.0, 1000.0, m),
                    capacity_cost: uniform_vec("capacity_cost", 10.0, 100.0, m),
                    max_capacity: uniform_vec("max_capacity", 200.0, 700.0, m),
                    transport_cost,
                }),
                scenarios,
                seed,
                dist: dist.clone(),
            }
        }
    };
    instance.validate()?;
    Ok(instance)
}

fn erdos_renyi_edges(n: usize, rng: &mut StreamRng) -> Vec<(usize, usize)> {
    let p = (10.0 / n as f64).min(1.0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn sample_scenarios(
    class: ProblemClass,
    n: usize,
    count: usize,
    dist: &DistributionSpec,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut params_rng = substream(seed, "scenario_params");
    let mut rng = substream(seed, "scenarios");
    match dist {
        DistributionSpec::Uniform => match class {
            ProblemClass::Selection | ProblemClass::VertexCover => (0..count)
                .map(|_| (0..n).map(|_| f64::from(rng.gen_range(1u32..=100))).collect())
                .collect(),
            ProblemClass::FacilityLocation => (0..count)
                .map(|_| (0..n).map(|_| rng.gen_range(10.0..=500.0)).collect())
                .collect(),
        },
        DistributionSpec::Normal(p) => sample_normal(p, n, count, &mut params_rng, &mut rng),
        DistributionSpec::Multimodal(p) => sample_multimodal(p, n, count, &mut params_rng, &mut rng),
    }
}

fn sample_normal(
    p: &NormalParams,
    n: usize,
    count: usize,
    params_rng: &mut StreamRng,
    rng: &mut StreamRng,
) -> Vec<Vec<f64>> {
    let laws: Vec<Normal<f64>> = (0..n)
        .map(|_| {
            let mean = params_rng.gen_range(p.mean_low..=p.mean_high);
            let sd = (p.rel_sd * mean).clamp(p.sd_min, p.sd_max);
            Normal::new(mean, sd).expect("validated deviation is positive")
        })
        .collect();
    (0..count)
        .map(|_| {
            laws.iter()
                .map(|law| law.sample(rng).clamp(p.clip_low, p.clip_high))
                .collect()
        })
        .collect()
}

fn sample_multimodal(
    p: &MultimodalParams,
    n: usize,
    count: usize,
    params_rng: &mut StreamRng,
    rng: &mut StreamRng,
) -> Vec<Vec<f64>> {
    let modes = params_rng.gen_range(p.modes_min..=p.modes_max);
    let mut centers = Vec::with_capacity(modes);
    let mut deviations = Vec::with_capacity(modes);
    for _ in 0..modes {
        centers.push(
            (0..n)
                .map(|_| params_rng.gen_range(p.center_low..=p.center_high))
                .collect::<Vec<f64>>(),
        );
        let per_mode = params_rng.gen_range(p.deviation_low..=p.deviation_high);
        deviations.push(if p.per_item_deviation {
            (0..n)
                .map(|_| params_rng.gen_range(p.deviation_low..=p.deviation_high))
                .collect::<Vec<f64>>()
        } else {
            vec![per_mode; n]
        });
    }
    let scale_law = (p.scale_sd > 0.0).then(|| Normal::new(1.0, p.scale_sd).expect("validated scale_sd"));
    (0..count)
        .map(|_| {
            let mode = rng.gen_range(0..modes);
            let scale = scale_law.map_or(1.0, |law| law.sample(rng).max(0.0));
            (0..n)
                .map(|i| {
                    let (c, d) = (centers[mode][i], deviations[mode][i]);
                    let v = if d > 0.0 {
                        rng.gen_range((1.0 - d) * c..=(1.0 + d) * c)
                    } else {
                        c
                    };
                    (v * scale).clamp(p.clip_low, p.clip_high)
                })
                .collect()
        })
        .collect()
}
