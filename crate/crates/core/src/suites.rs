//! Self-checks shared by the acceptance harness and `gjs verify`. Each suite
//! returns a `Report`; computation errors are recorded as failures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algnum::AlgebraicReal;
use crate::gjs::{free_poisson_moment, GjsModel, StandardKernel};
use crate::kac::{self, Vector};
use crate::mp_oracle::{self, FreePoissonParams};
use crate::ncpart::{
    closure_loop_count, cumulants_to_moments, enumerate_nc, induced_partition, mobius,
    moments_to_cumulants, multiplicative_extension, tuples, FunctionTable, MemoTable,
    NCPartition,
};
use crate::report::Report;
use crate::vncalc::{
    self, ampliate, compute_m0, compute_m1, compute_m2, deampliate_matrix, Branch, VNExpression,
};

fn ar(n: i64) -> AlgebraicReal {
    AlgebraicReal::from_integer(n)
}

fn rat(n: i64, d: i64) -> AlgebraicReal {
    AlgebraicReal::rational(n, d)
}

fn sqrt(n: i64) -> AlgebraicReal {
    AlgebraicReal::sqrt(n)
}

/// `M₁`, `M₂`, `M₀` against their closed forms for every dimension profile.
pub fn factor_parameters(n_max: usize) -> Report {
    let mut report = Report::new();
    for n in 2..=n_max {
        let result = (|| -> Result<Option<String>, String> {
            let s = sqrt(n as i64);
            let ni = n as i64;
            let want = [
                VNExpression::lf(&(&ar(2) * &s) - &ar(1)),
                VNExpression::lf(&(&(&ar(2) / &s) - &rat(2, ni)) + &ar(1)),
                VNExpression::lf(&(&(&ar(2 * ni) * &s) - &ar(2 * ni)) + &ar(1)),
            ];
            let want: Vec<VNExpression> = want.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            let profiles = vncalc::profiles(n);
            for p in &profiles {
                let got = [compute_m1(p), compute_m2(p), compute_m0(p)];
                for (name, (g, w)) in ["M1", "M2", "M0"].iter().zip(got.into_iter().zip(&want)) {
                    let g = g.map_err(|e| format!("{name} for {p:?}: {e}"))?;
                    if &g != w {
                        return Err(format!("{name} for {p:?}: {g}, expected {w}"));
                    }
                }
            }
            Ok(Some(format!("{} profiles, M1 = {}", profiles.len(), want[0])))
        })();
        report.record(format!("factor parameters, n = {n}"), result);
    }
    report
}

/// Closed Temperley–Lieb diagrams have `n − |π| + 2` loops.
pub fn euler(n_max: usize) -> Report {
    let mut report = Report::new();
    for n in 1..=n_max {
        let result = enumerate_nc(n).map_err(|e| e.to_string()).and_then(|all| {
            for pi in &all {
                let loops = closure_loop_count(pi);
                let want = n - pi.num_classes() + 2;
                if loops != want {
                    return Err(format!("{pi}: {loops} loops, expected {want}"));
                }
            }
            Ok(Some(format!("{} partitions", all.len())))
        });
        report.record(format!("loop count, n = {n}"), result);
    }
    report
}

fn random_value(rng: &mut ChaCha8Rng) -> AlgebraicReal {
    let a = rng.gen_range(-6i64..=6);
    let b = rng.gen_range(-4i64..=4);
    let d = rng.gen_range(1i64..=3);
    &rat(a, d) + &(&rat(b, d) * &sqrt(2))
}

fn random_table(rng: &mut ChaCha8Rng, alphabet: &[usize], n_max: usize) -> MemoTable<usize> {
    let mut table = MemoTable::new(n_max);
    for args in tuples(alphabet, n_max) {
        let v = random_value(rng);
        table.insert(args, v);
    }
    table
}

type Interval = (usize, usize, i64);

/// `(τ, π, μ(π, τ))` for all `π ≤ τ` in `NC(n)`.
fn intervals(all: &[NCPartition]) -> Result<Vec<Interval>, String> {
    let mut out = Vec::new();
    for (t, tau) in all.iter().enumerate() {
        for (p, pi) in all.iter().enumerate() {
            if pi.refines(tau) {
                out.push((t, p, mobius(pi, tau).map_err(|e| e.to_string())?));
            }
        }
    }
    Ok(out)
}

fn mobius_seed(seed: u64, n_max: usize, lattices: &[(Vec<NCPartition>, Vec<Interval>)]) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = [0usize, 1];
    let err = |e: crate::ncpart::PartitionError| e.to_string();
    let phi = random_table(&mut rng, &alphabet, n_max);
    let kappa = moments_to_cumulants(&phi, n_max).map_err(err)?;
    let back = cumulants_to_moments(&kappa, n_max).map_err(err)?;
    let fresh = random_table(&mut rng, &alphabet, n_max);
    let to_phi = cumulants_to_moments(&fresh, n_max).map_err(err)?;
    let again = moments_to_cumulants(&to_phi, n_max).map_err(err)?;
    for args in tuples(&alphabet, n_max) {
        if back.eval(&args).map_err(err)? != phi.eval(&args).map_err(err)? {
            return Err(format!("seed {seed}: moments → cumulants → moments differs at {args:?}"));
        }
        if again.eval(&args).map_err(err)? != fresh.eval(&args).map_err(err)? {
            return Err(format!("seed {seed}: cumulants → moments → cumulants differs at {args:?}"));
        }
    }
    for n in 1..=n_max {
        let (all, ivals) = &lattices[n - 1];
        for _ in 0..2 {
            let args: Vec<usize> = (0..n).map(|_| rng.gen_range(0..alphabet.len())).collect();
            let mut phi_pi = Vec::with_capacity(all.len());
            let mut kappa_pi = Vec::with_capacity(all.len());
            for pi in all {
                phi_pi.push(multiplicative_extension(&phi, pi, &args).map_err(err)?);
                kappa_pi.push(multiplicative_extension(&kappa, pi, &args).map_err(err)?);
            }
            let mut moment_sum = vec![AlgebraicReal::zero(); all.len()];
            let mut cumulant_sum = vec![AlgebraicReal::zero(); all.len()];
            for &(t, p, mu) in ivals {
                moment_sum[t] += &kappa_pi[p];
                cumulant_sum[t] += &phi_pi[p].scale(&num_rational::BigRational::from_integer(mu.into()));
            }
            for (t, tau) in all.iter().enumerate() {
                let which = if tau.num_classes() == 1 { ("1", "2") } else { ("3", "4") };
                if moment_sum[t] != phi_pi[t] {
                    return Err(format!("seed {seed}: condition ({}) fails at τ = {tau}, args {args:?}", which.0));
                }
                if cumulant_sum[t] != kappa_pi[t] {
                    return Err(format!("seed {seed}: condition ({}) fails at τ = {tau}, args {args:?}", which.1));
                }
            }
        }
    }
    Ok(())
}

/// Transform round trips and the four equivalent moment–cumulant relations
/// on random `ℚ(√2)`-valued tables.
pub fn mobius_conditions(n_max: usize, seeds: u64) -> Report {
    let mut report = Report::new();
    let lattices: Result<Vec<_>, String> = (1..=n_max)
        .map(|n| {
            let all = enumerate_nc(n).map_err(|e| e.to_string())?;
            let iv = intervals(&all)?;
            Ok((all, iv))
        })
        .collect();
    let result = lattices.and_then(|lat| {
        for seed in 0..seeds {
            mobius_seed(seed, n_max, &lat)?;
        }
        Ok(Some(format!("{seeds} seeds, n ≤ {n_max}")))
    });
    report.record("moment-cumulant relations on random tables", result);
    report
}

fn routes_agree(model: &GjsModel, letters: &[Vector], words: &[Vec<usize>]) -> Result<Option<String>, String> {
    let tables = model.tau2_tables(letters).map_err(|e| e.to_string())?;
    for w in words {
        let a = tables.cumulant_route(w).map_err(|e| e.to_string())?;
        let b = tables.diagrammatic_route(w).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("word {w:?}: {a} vs {b}"));
        }
    }
    Ok(Some(format!("{} words", words.len())))
}

/// Words for a `τ₂` route check over `0 = X` and `1..=letters`: every word
/// up to `max_len`, or `sample` seeded random words of length `1..=max_len`.
pub fn route_words(letters: usize, max_len: usize, sample: Option<(usize, u64)>) -> Vec<Vec<usize>> {
    let ids: Vec<usize> = (0..=letters).collect();
    match sample {
        None => tuples(&ids, max_len),
        Some((count, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let len = rng.gen_range(1..=max_len);
                    (0..len)
                        .map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..=letters) })
                        .collect()
                })
                .collect()
        }
    }
}

/// `τ₂` by cumulants and by loop counting on the given words, with the
/// basis of `H` as letters.
pub fn tau2_routes_on(model: &GjsModel, max_len: usize, sample: Option<(usize, u64)>) -> Report {
    let k = model.algebra();
    let letters: Vec<Vector> = (0..k.dim()).map(|i| k.basis_vector(i)).collect();
    let words = route_words(letters.len(), max_len, sample);
    let mut report = Report::new();
    let scope = match sample {
        None => format!("all words of length ≤ {max_len}"),
        Some((count, _)) => format!("{count} random words of length ≤ {max_len}"),
    };
    report.record(format!("tau2 routes agree on {}, {scope}", k.name()), routes_agree(model, &letters, &words));
    report
}

/// `τ₂` by cumulants and by loop counting, over all short words in `X, e, u`
/// for `ℂ[ℤ/2]` and random words for the dual of `ℂ[S₃]`.
pub fn tau2_routes(c2_len: usize, s3_words: usize, s3_len: usize, seed: u64) -> Report {
    let mut report = Report::new();
    match GjsModel::builtin("c2") {
        Some(model) => report.extend(tau2_routes_on(&model, c2_len, None)),
        None => report.fail("routes agree on C[Z/2]", "missing built-in c2"),
    }
    match GjsModel::builtin("dual-s3") {
        Some(model) => {
            let k = model.algebra();
            let mut letters: Vec<Vector> = (0..k.dim()).map(|i| k.basis_vector(i)).collect();
            letters.push((0..k.dim()).map(|i| rat(i as i64 - 2, 3)).collect());
            let words = route_words(letters.len(), s3_len, Some((s3_words, seed)));
            report.record(
                format!("tau2 routes agree on {}, {s3_words} random words of length ≤ {s3_len}", k.name()),
                routes_agree(&model, &letters, &words),
            );
        }
        None => report.fail("routes agree on dual S3", "missing built-in dual-s3"),
    }
    report
}

/// Uniform R-cyclicity of each irrep's entries and the free Poisson law of
/// its matrix, up to `t_max`.
pub fn r_cyclic_on(model: &GjsModel, gammas: &[usize], t_max: usize) -> Report {
    let mut report = Report::new();
    let dims = model.irreps().dims();
    for &gamma in gammas {
        let tag = format!("irrep {} (d = {})", gamma + 1, dims[gamma]);
        match model.verify_r_cyclic(&StandardKernel, gamma, t_max) {
            Ok(r) => {
                for e in r.entries {
                    let check = format!("{}: {tag}", e.check);
                    match e.status {
                        crate::report::Status::Fail => report.fail(check, e.witness.unwrap_or_default()),
                        crate::report::Status::Pass => report.pass(check, e.witness),
                    }
                }
            }
            Err(e) => report.fail(format!("R-cyclic pattern: {tag}"), e.to_string()),
        }
        let moments = (|| -> Result<Option<String>, String> {
            let delta = model.delta().clone();
            let rate = delta.inv().map_err(|e| e.to_string())?;
            for t in 1..=t_max {
                let got = model.matrix_moment(gamma, t).map_err(|e| e.to_string())?;
                let want = free_poisson_moment(&rate, &delta, t).map_err(|e| e.to_string())?;
                if got != want {
                    return Err(format!("t = {t}: {got} vs {want}"));
                }
            }
            Ok(Some(format!("t ≤ {t_max}, δ = {delta}")))
        })();
        report.record(format!("matrix moments equal free Poisson(1/δ, δ) moments: {tag}"), moments);
    }
    report
}

/// Entry cumulants of the 2-dimensional irrep of the dual of `ℂ[S₃]` are
/// uniformly R-cyclic; its matrix is free Poisson with rate `δ⁻¹`, jump `δ`.
pub fn r_cyclic(t_max: usize) -> Report {
    let mut report = Report::new();
    let Some(model) = GjsModel::builtin("dual-s3") else {
        report.fail("R-cyclic pattern", "missing built-in dual-s3");
        return report;
    };
    match model.irreps().dims().iter().position(|&x| x == 2) {
        Some(gamma) => report.extend(r_cyclic_on(&model, &[gamma], t_max)),
        None => report.fail("R-cyclic pattern", "no 2-dimensional irrep"),
    }
    report
}

/// Mixed cumulants across distinct irreps of one model vanish.
pub fn freeness_on(model: &GjsModel, t_max: usize) -> Report {
    let mut report = Report::new();
    let name = model.algebra().name().to_string();
    match model.verify_freeness(&StandardKernel, t_max) {
        Ok(r) => {
            for e in r.entries {
                let check = format!("{}: {name}, order ≤ {t_max}", e.check);
                match e.status {
                    crate::report::Status::Fail => report.fail(check, e.witness.unwrap_or_default()),
                    crate::report::Status::Pass => report.pass(check, e.witness),
                }
            }
        }
        Err(e) => report.fail(format!("freeness on {name}"), e.to_string()),
    }
    report
}

/// Mixed cumulants across distinct irreps vanish.
pub fn freeness(t_max: usize) -> Report {
    let mut report = Report::new();
    for name in ["c4", "dual-s3"] {
        match GjsModel::builtin(name) {
            Some(model) => report.extend(freeness_on(&model, t_max)),
            None => report.fail(format!("freeness on {name}"), "missing built-in"),
        }
    }
    report
}

/// The partition induced on the complement of a set of `X` positions.
pub fn worked_example() -> Report {
    let mut report = Report::new();
    let result = (|| -> Result<Option<String>, String> {
        let pi = NCPartition::new(
            vec![1, 3, 4, 5, 8, 12, 14, 15],
            vec![vec![1, 5], vec![3, 4], vec![8, 14, 15], vec![12]],
        )
        .map_err(|e| e.to_string())?;
        let e: Vec<usize> = vec![2, 6, 7, 9, 10, 11, 13, 16];
        let got = induced_partition(&pi, &e).map_err(|e| e.to_string())?;
        let want = NCPartition::new(e.clone(), vec![vec![2], vec![6, 7, 16], vec![9, 10, 11, 13]]).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("{got}, expected {want}"));
        }
        Ok(Some(got.to_string()))
    })();
    report.record("induced partition on t = 16", result);
    report
}

fn same_branches(
    label: String,
    large: Result<VNExpression, vncalc::VnError>,
    small: Result<VNExpression, vncalc::VnError>,
    expect: Option<VNExpression>,
) -> (String, Result<Option<String>, String>) {
    let result = match (large, small) {
        (Ok(a), Ok(b)) if a != b => Err(format!("{a} vs {b}")),
        (Ok(a), Ok(_)) => match expect {
            Some(w) if w != a => Err(format!("{a}, expected {w}")),
            _ => Ok(Some(a.to_string())),
        },
        (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
    };
    (label, result)
}

/// Both branches of each piecewise free product rule agree on the boundary.
pub fn dykema_boundaries() -> Report {
    let mut report = Report::new();
    let one = ar(1);
    let inv_sqrt2 = sqrt(2).inv().expect("nonzero");
    let prop_cases = [
        (one.clone(), rat(1, 2), one.clone(), rat(1, 2)),
        (ar(2), rat(1, 3), rat(3, 2), rat(2, 3)),
        (&one + &sqrt(3), inv_sqrt2.clone(), ar(5), &one - &inv_sqrt2),
    ];
    for (r, a, s, b) in prop_cases {
        let (label, res) = same_branches(
            format!("ℂ ⊕ LF free product at α + β = 1 (r = {r}, α = {a}, s = {s})"),
            vncalc::dykprop_branch(&r, &a, &s, &b, Branch::Large),
            vncalc::dykprop_branch(&r, &a, &s, &b, Branch::Small),
            None,
        );
        report.record(label, res);
    }
    let dyk2_cases = [
        (one.clone(), 2usize, VNExpression::lf(rat(19, 16)).ok()),
        (ar(2), 3, None),
        (&one + &sqrt(2), 2, None),
    ];
    for (r, d, expect) in dyk2_cases {
        let alpha = rat(1, (d * d) as i64);
        let (label, res) = same_branches(
            format!("free product with M{d} at α = d⁻² (r = {r})"),
            vncalc::dyk2_branch(&r, &alpha, d, Branch::Large),
            vncalc::dyk2_branch(&r, &alpha, d, Branch::Small),
            expect,
        );
        report.record(label, res);
    }
    for (delta, n, expect) in [(ar(2), 2usize, VNExpression::lf(rat(3, 2)).ok()), (ar(3), 3, None), (ar(4), 4, None)] {
        let (label, res) = same_branches(
            format!("free power at N = δ = {n}"),
            vncalc::power_free_product_branch(&delta, n, Branch::Large),
            vncalc::power_free_product_branch(&delta, n, Branch::Small),
            expect,
        );
        report.record(label, res);
    }
    report
}

/// Quadrature moments of the Marchenko–Pastur density against the
/// combinatorial free Poisson moments.
pub fn mp(k_max: usize, tol: f64) -> Report {
    let mut report = Report::new();
    let rates = [rat(1, 2), ar(1), ar(2)];
    let jumps = [ar(1), sqrt(2), sqrt(6)];
    for rate in &rates {
        for jump in &jumps {
            let result = (|| -> Result<Option<String>, String> {
                let params = FreePoissonParams::exact(rate, jump).map_err(|e| e.to_string())?;
                let mut worst = 0f64;
                for k in 0..=k_max {
                    let exact = free_poisson_moment(rate, jump, k).map_err(|e| e.to_string())?;
                    let q = mp_oracle::mp_moment(&params, k, tol * 1e-3).map_err(|e| e.to_string())?;
                    let dev = q.deviation(&exact).map_err(|e| e.to_string())?;
                    if dev > tol {
                        return Err(format!("k = {k}: quadrature {} vs {} (off by {dev:e})", q.value, exact.to_f64()));
                    }
                    worst = worst.max(dev);
                }
                let mass = mp_oracle::density_mass(&params, 1e-12).map_err(|e| e.to_string())?;
                let want = params.rate().min(1.0);
                if (mass.value - want).abs() > 1e-8 {
                    return Err(format!("density mass {} vs {want}", mass.value));
                }
                Ok(Some(format!("max deviation {worst:.1e}")))
            })();
            report.record(format!("MP moments k ≤ {k_max}, rate {rate}, jump {jump}"), result);
        }
    }
    for n in [2i64, 4, 6] {
        let delta = sqrt(n);
        let result = (|| -> Result<Option<String>, String> {
            let rate = delta.inv().map_err(|e| e.to_string())?;
            let params = FreePoissonParams::exact(&rate, &delta).map_err(|e| e.to_string())?;
            let want = 1.0 - rate.to_f64();
            let got = mp_oracle::atom_mass(&params);
            if (got - want).abs() > 1e-12 {
                return Err(format!("atom {got} vs {want}"));
            }
            Ok(Some(format!("{got:.15}")))
        })();
        report.record(format!("atom mass 1 − δ⁻¹ at δ = {delta}"), result);
    }
    report
}

/// Every built-in algebra and its irreps pass validation exactly.
pub fn kac_axioms() -> Report {
    let mut report = Report::new();
    for name in kac::BUILTIN_NAMES {
        let Some((k, irreps)) = kac::builtin(name) else {
            report.fail(format!("{name}: built-in"), "missing");
            continue;
        };
        let mut r = kac::validate(&k);
        r.extend(kac::validate_irreps(&k, &irreps));
        let failed: Vec<String> = r.failures().map(|e| format!("{} ({})", e.check, e.witness.clone().unwrap_or_default())).collect();
        let result = if failed.is_empty() {
            Ok(Some(format!("{} checks", r.entries.len())))
        } else {
            Err(failed.join("; "))
        };
        report.record(format!("{name}: axioms and irreps"), result);
    }
    report
}

/// `(M₂)_{1/n} = M₀`, `(M₀)_n = M₂` and de-ampliation of `M₂` by `n`.
pub fn ampliation(n_max: usize) -> Report {
    let mut report = Report::new();
    for n in 2..=n_max {
        let result = (|| -> Result<Option<String>, String> {
            let e = |x: vncalc::VnError| x.to_string();
            for p in vncalc::profiles(n) {
                let m2 = compute_m2(&p).map_err(e)?;
                let m0 = compute_m0(&p).map_err(e)?;
                if ampliate(&m2, &rat(1, n as i64)).map_err(e)? != m0 {
                    return Err(format!("{p:?}: (M2)_(1/n) ≠ M0"));
                }
                if ampliate(&m0, &ar(n as i64)).map_err(e)? != m2 {
                    return Err(format!("{p:?}: (M0)_n ≠ M2"));
                }
                if deampliate_matrix(&m2, n).map_err(e)? != m0 {
                    return Err(format!("{p:?}: de-ampliation of M2 ≠ M0"));
                }
            }
            Ok(None)
        })();
        report.record(format!("ampliation round trip, n = {n}"), result);
    }
    report
}
