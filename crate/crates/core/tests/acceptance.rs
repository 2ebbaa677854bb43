//! Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails. Every check is exact.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orbdiam::diameter::{
    directed_orbit_diameter, directed_orbit_diameter_bfs, instance_diameter, sumset_add, trivial_bound,
    DiameterOptions, Engine, IndexedSet,
};
use orbdiam::families::{
    cyclic_shift, gl_natural, singer_control, singer_subgroup, sl_natural, sym_square, wreath_c2_cp,
};
use orbdiam::field::{FpMatrix, FpScalar, FpVector, PrimeField};
use orbdiam::group::{
    close_group, find_min_degree_order_p_element, is_irreducible, orbit_of_vector, orbits_on_v, AffineInstance,
    Orbit, DEFAULT_CLOSURE_CAP,
};
use orbdiam::power_sums::{solvability_frontier, DEFAULT_SEARCH_BUDGET};
use orbdiam::report::certify_report;
use orbdiam::space::VectorSpace;
use orbdiam::witness::{
    build_line_witness_with, certify_instance, Branch, CertifyOptions, ExponentTable, WitnessError,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Instances covering every family; `shift-3-3` is the reducible one.
fn test_instances() -> Vec<AffineInstance> {
    vec![
        wreath_c2_cp(3).unwrap(),
        wreath_c2_cp(5).unwrap(),
        sl_natural(2, 3).unwrap(),
        sl_natural(2, 5).unwrap(),
        sl_natural(2, 11).unwrap(),
        sl_natural(3, 3).unwrap(),
        gl_natural(2, 3).unwrap(),
        gl_natural(2, 5).unwrap(),
        sym_square(5).unwrap(),
        sym_square(7).unwrap(),
        singer_control(2, 3).unwrap(),
        singer_control(2, 5).unwrap(),
        singer_control(3, 3).unwrap(),
        singer_subgroup(2, 7, 4).unwrap(),
        singer_subgroup(2, 13, 8).unwrap(),
        cyclic_shift(3, 3).unwrap(),
    ]
}

fn criterion_1() -> Outcome {
    let mut parts = Vec::new();
    for (p, expected, limit) in [(3u32, 3usize, 1u64), (5, 10, 1), (7, 21, 300)] {
        let inst = wreath_c2_cp(p).unwrap();
        let start = Instant::now();
        let report = instance_diameter(&inst, DiameterOptions::default()).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        ensure(report.overall_directed == expected, || {
            format!("p = {p}: diameter {} != {expected}", report.overall_directed)
        })?;
        ensure(took <= Duration::from_secs(limit), || format!("p = {p} took {took:?} > {limit}s"))?;
        if p <= 5 {
            for engine in [Engine::Sumset, Engine::Bfs] {
                let other = instance_diameter(&inst, DiameterOptions { undirected: false, engine })
                    .map_err(|e| e.to_string())?;
                ensure(other.overall_directed == expected, || format!("p = {p}: {engine:?} engine disagrees"))?;
            }
        }
        parts.push(format!("p={p}: {} in {:.2?}", report.overall_directed, took));
    }
    Ok(parts.join(", "))
}

fn criterion_2() -> Outcome {
    let instances = test_instances();
    let mut orbits = 0;
    for inst in &instances {
        let space = inst.space();
        for orbit in orbits_on_v(inst).orbits() {
            let a = directed_orbit_diameter(space, orbit);
            let b = directed_orbit_diameter_bfs(space, orbit);
            ensure(a == b, || format!("{} orbit {}: sumset {a:?} vs bfs {b:?}", inst.label(), orbit.id()))?;
            orbits += 1;
        }
    }
    Ok(format!("{} instances, {orbits} orbits agree", instances.len()))
}

fn criterion_3() -> Outcome {
    let mut checked = Vec::new();
    let mut instances = test_instances();
    instances.push(sym_square(83).unwrap());
    instances.push(sl_natural(2, 37).unwrap());
    for inst in &instances {
        let partition = orbits_on_v(inst);
        if !is_irreducible(inst, &partition) {
            continue;
        }
        let report = instance_diameter(inst, DiameterOptions::default()).map_err(|e| e.to_string())?;
        let bound = inst.dim() * (inst.p() as usize - 1);
        ensure(report.overall_directed <= bound, || {
            format!("{}: {} > d(p-1) = {bound}", inst.label(), report.overall_directed)
        })?;
        ensure(trivial_bound(inst.space()) == bound, || "trivial_bound mismatch".into())?;
        checked.push(format!("{}={}", inst.label(), report.overall_directed));
    }
    Ok(format!("{} irreducible instances: {}", checked.len(), checked.join(" ")))
}

/// Re-checks a serialized witness with plain integer arithmetic.
fn witness_sums(p: u32, target: &[FpScalar], summands: &[Vec<FpScalar>]) -> bool {
    let mut acc = vec![0u64; target.len()];
    for s in summands {
        for (a, &c) in acc.iter_mut().zip(s) {
            *a += c as u64;
        }
    }
    acc.iter().zip(target).all(|(&a, &t)| a % p as u64 == t as u64)
}

fn criterion_4() -> Outcome {
    let mut instances = test_instances();
    instances.push(wreath_c2_cp(7).unwrap());
    instances.push(sl_natural(2, 37).unwrap());
    instances.push(sym_square(83).unwrap());
    let mut lines = Vec::new();
    for inst in &instances {
        let partition = orbits_on_v(inst);
        let group = close_group(inst, DEFAULT_CLOSURE_CAP).map_err(|e| e.to_string())?;
        if !is_irreducible(inst, &partition) || group.order() % inst.p() as usize != 0 {
            continue;
        }
        let d = inst.dim();
        let cert = certify_instance(inst, CertifyOptions::default()).map_err(|e| format!("{}: {e}", inst.label()))?;
        ensure(cert.verified && cert.max_witness_length <= 9 * d * d * d, || {
            format!("{}: length {} exceeds 9d^3", inst.label(), cert.max_witness_length)
        })?;
        let branch_ok = match cert.branch {
            Branch::Unipotent => cert.branch_bound == d * cert.m.unwrap() && cert.branch_bound <= 4 * d * d * d,
            Branch::Trivial => cert.branch_bound == d * (inst.p() as usize - 1),
        };
        ensure(branch_ok && cert.max_witness_length <= cert.branch_bound, || {
            format!("{}: branch bound {} violated", inst.label(), cert.branch_bound)
        })?;
        let expect_trivial = (inst.p() as usize) < 9 * d * d;
        ensure((cert.branch == Branch::Trivial) == expect_trivial, || format!("{}: wrong branch", inst.label()))?;

        let (_, records) = certify_report(inst, CertifyOptions::default(), None).map_err(|e| e.to_string())?;
        let space = inst.space();
        for r in &records {
            let orbit = r.orbit as u32;
            let members_ok = r
                .summands
                .iter()
                .all(|s| partition.orbit_of(space.encode(&FpVector::new(inst.field(), s.clone()).unwrap())) == orbit);
            ensure(r.verified && members_ok && witness_sums(inst.p(), &r.target, &r.summands), || {
                format!("{}: serialized witness for orbit {} fails re-check", inst.label(), r.orbit)
            })?;
        }
        lines.push(format!("{}:{:?}:{}/{}", inst.label(), cert.branch, cert.max_witness_length, 9 * d * d * d));
    }
    Ok(format!("{} instances certified [{}]", lines.len(), lines.join(" ")))
}

/// `A^x` by repeated multiplication.
fn naive_pow(a: &FpMatrix, x: u64) -> FpMatrix {
    (0..x).fold(FpMatrix::identity(a.field(), a.dim()), |acc, _| acc.mul(a).unwrap())
}

fn check_line(label: &str, space: &VectorSpace, orbit: &Orbit, a: &FpMatrix, k: usize) -> Result<usize, String> {
    let f = space.field();
    let table = ExponentTable::build(f, k, DEFAULT_SEARCH_BUDGET).map_err(|e| format!("{label}: {e}"))?;
    let m = table.m();
    let line = build_line_witness_with(space, orbit, a, &table).map_err(|e| format!("{label}: {e}"))?;
    let n_top = naive_pow(&a.minus_identity(), k as u64 - 1);
    let powers: Vec<FpMatrix> = {
        let mut v = Vec::with_capacity(f.modulus() as usize);
        let mut cur = FpMatrix::identity(f, a.dim());
        for _ in 0..f.modulus() {
            v.push(cur.clone());
            cur = cur.mul(a).unwrap();
        }
        v
    };
    let v = line.vector();
    for alpha in 0..f.modulus() {
        let xs = table.exponents(alpha);
        ensure(xs.len() == m, || format!("{label}: alpha {alpha} has {} exponents", xs.len()))?;
        let lhs = xs.iter().fold(FpMatrix::zero(f, a.dim()), |acc, &x| acc.add(&powers[x as usize]).unwrap());
        let rhs = FpMatrix::identity(f, a.dim()).scale(f.reduce(m as u64)).add(&n_top.scale(alpha)).unwrap();
        ensure(lhs == rhs, || format!("{label}: operator identity fails at alpha = {alpha}"))?;

        let summands = line.summands(alpha);
        let expected: Vec<FpVector> = xs.iter().map(|&x| orbdiam::field::vec_act(v, &powers[x as usize]).unwrap()).collect();
        ensure(summands == expected.as_slice(), || format!("{label}: summands differ at alpha = {alpha}"))?;
        let sum = FpVector::sum(f, space.dim(), summands).unwrap();
        let target = v.scale(f.reduce(m as u64)).add(&orbdiam::field::vec_act(v, &n_top).unwrap().scale(alpha)).unwrap();
        ensure(sum == target, || format!("{label}: vector identity fails at alpha = {alpha}"))?;
        ensure(summands.iter().all(|s| orbit.contains(space.encode(s))), || {
            format!("{label}: summand outside orbit at alpha = {alpha}")
        })?;
    }
    Ok(m)
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();

    let inst = sl_natural(2, 11).unwrap();
    let partition = orbits_on_v(&inst);
    let a = inst.generators()[0].clone();
    let m = check_line("SL(2,11)", inst.space(), &partition.orbits()[0], &a, 2)?;
    ensure(m == 1, || format!("SL(2,11): m = {m}, expected 1"))?;
    parts.push("SL(2,11) k=2 m=1".to_string());

    let f89 = PrimeField::new(89).unwrap();
    let space = VectorSpace::new(f89, 3).unwrap();
    let j = FpMatrix::jordan_block(f89, 3);
    let orbit = orbit_of_vector(&space, std::slice::from_ref(&j), &FpVector::unit(f89, 3, 0));
    let m = check_line("<J3> in GL(3,89)", &space, &orbit, &j, 3)?;
    parts.push(format!("<J3> over F_89 k=3 m={m}"));

    let inst = sl_natural(3, 97).unwrap();
    let partition = orbits_on_v(&inst);
    let a = inst.generators()[0].clone();
    let m = check_line("SL(3,97)", inst.space(), &partition.orbits()[0], &a, 2)?;
    parts.push(format!("SL(3,97) transvection k=2 m={m}"));

    let inst = sym_square(83).unwrap();
    let group = close_group(&inst, DEFAULT_CLOSURE_CAP).unwrap();
    let (a, k) = find_min_degree_order_p_element(&group, 83).ok_or("sym2(83): no order-p element")?;
    let partition = orbits_on_v(&inst);
    for orbit in partition.orbits() {
        check_line("sym2(83)", inst.space(), orbit, &a, k)?;
    }
    parts.push(format!("sym2(83) k={k} on {} orbits", partition.len()));
    Ok(format!("all alpha: {}", parts.join("; ")))
}

fn binom_int(x: u64, i: u64) -> u128 {
    if i > x {
        return 0;
    }
    (0..i).fold(1u128, |acc, j| acc * (x - j) as u128 / (j + 1) as u128)
}

fn criterion_6() -> Outcome {
    let f = |p| PrimeField::new(p).unwrap();
    let conj = {
        let f11 = f(11);
        let p = FpMatrix::from_rows(f11, &[&[1, 2, 0], &[0, 1, 3], &[4, 0, 1]]).unwrap();
        let j = FpMatrix::jordan_block(f11, 3);
        p.mul(&j).unwrap().mul(&p.inverse().unwrap()).unwrap()
    };
    let cases = [(FpMatrix::from_rows(f(3), &[&[1, 1], &[0, 1]]).unwrap(), 2usize),
        (FpMatrix::jordan_block(f(3), 3), 3),
        (FpMatrix::jordan_block(f(5), 4), 4),
        (FpMatrix::from_rows(f(5), &[&[1, 0, 0], &[2, 1, 0], &[0, 0, 1]]).unwrap(), 2),
        (conj, 3),
        (FpMatrix::jordan_block(f(37), 5), 5),
        (
            FpMatrix::block_diagonal(f(37), &[FpMatrix::jordan_block(f(37), 2), FpMatrix::jordan_block(f(37), 3)]),
            3,
        )];
    for (idx, (a, k)) in cases.iter().enumerate() {
        let fld = a.field();
        let n = a.minus_identity();
        ensure(naive_pow(&n, *k as u64).is_zero() && !naive_pow(&n, *k as u64 - 1).is_zero(), || {
            format!("case {idx}: nilpotency degree is not {k}")
        })?;
        let npow: Vec<FpMatrix> = (0..*k as u64).map(|i| naive_pow(&n, i)).collect();
        let mut direct = FpMatrix::identity(fld, a.dim());
        for x in 0..fld.modulus() as u64 {
            let expanded = npow.iter().enumerate().fold(FpMatrix::zero(fld, a.dim()), |acc, (i, ni)| {
                let c = (binom_int(x, i as u64) % fld.modulus() as u128) as FpScalar;
                acc.add(&ni.scale(c)).unwrap()
            });
            ensure(expanded == direct, || format!("case {idx} (p = {}): expansion fails at x = {x}", fld.modulus()))?;
            direct = direct.mul(a).unwrap();
        }
        ensure(direct.is_identity(), || format!("case {idx}: A^p != Id"))?;
    }
    Ok(format!("{} unipotent matrices over p in {{3, 5, 11, 37}}, all x in [0, p)", cases.len()))
}

fn primes_between(lo: u32, hi: u32) -> Vec<u32> {
    (lo.max(2)..=hi).filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)).collect()
}

/// Vectors `(Σx_j, …, Σx_j^k)` over all m-tuples, built as an iterated sumset.
fn reachable_power_sums(p: u32, k: usize, m: usize) -> HashSet<Vec<u64>> {
    let p64 = p as u64;
    let atoms: Vec<Vec<u64>> =
        (0..p64).map(|x| (1..=k as u32).map(|i| x.pow(i) % p64).collect()).collect();
    let mut reach: HashSet<Vec<u64>> = HashSet::from([vec![0; k]]);
    for _ in 0..m {
        reach = reach
            .iter()
            .flat_map(|r| atoms.iter().map(move |a| r.iter().zip(a).map(|(x, y)| (x + y) % p64).collect()))
            .collect();
    }
    reach
}

fn criterion_7() -> Outcome {
    let mut asserted = Vec::new();
    let mut recorded = Vec::new();
    for (k, m) in [(1usize, 1usize), (2, 7)] {
        let expected_m = if k == 1 { 1 } else { (4.0 * k as f64 * (k as f64).ln()).ceil() as usize + 1 };
        ensure(m == expected_m, || format!("k = {k}: m = {m} != {expected_m}"))?;
        for p in primes_between(2, 50) {
            let field = PrimeField::new(p).unwrap();
            let rows = solvability_frontier(field, k, m, DEFAULT_SEARCH_BUDGET).map_err(|e| e.to_string())?;
            let solver_says = rows[m - 1].all_solvable;
            let oracle_says = reachable_power_sums(p, k, m).len() == (p as usize).pow(k as u32);
            ensure(solver_says == oracle_says, || format!("p = {p}, k = {k}: solver and oracle disagree"))?;
            if p as usize >= 9 * k * k {
                ensure(solver_says, || format!("p = {p}, k = {k}, m = {m}: some rhs unsolvable"))?;
                asserted.push(format!("k{k}p{p}"));
            } else {
                recorded.push(format!("k{k}p{p}:{}", if solver_says { "all" } else { "gap" }));
            }
        }
    }
    Ok(format!(
        "all rhs solvable for {}; recorded only (p < 9k^2): {}",
        asserted.join(" "),
        recorded.join(" ")
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pairs = 0;
    for (p, d) in [(3u32, 2usize), (5, 2)] {
        let space = VectorSpace::new(PrimeField::new(p).unwrap(), d).unwrap();
        let n = space.size();
        for _ in 0..100 {
            let density: f64 = rng.gen_range(0.0..0.6);
            let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
            let t: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
            let mut oracle = vec![false; n];
            for &a in &s {
                for &b in &t {
                    let (x, y) = (space.decode(a), space.decode(b));
                    let coords: Vec<FpScalar> =
                        x.coords().iter().zip(y.coords()).map(|(&u, &v)| (u + v) % p).collect();
                    oracle[space.encode_coords(&coords)] = true;
                }
            }
            let got = sumset_add(&space, &IndexedSet::from_indices(n, s.clone()), &IndexedSet::from_indices(n, t.clone()));
            let expected: Vec<usize> = (0..n).filter(|&i| oracle[i]).collect();
            ensure(got.iter().collect::<Vec<_>>() == expected, || format!("F_{p}^{d}: sumset mismatch"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} random pairs over F_3^2 and F_5^2"))
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    for inst in [
        singer_control(2, 3).unwrap(),
        singer_control(2, 5).unwrap(),
        singer_control(3, 3).unwrap(),
        singer_control(2, 7).unwrap(),
        singer_subgroup(2, 7, 4).unwrap(),
    ] {
        match certify_instance(&inst, CertifyOptions::default()) {
            Err(WitnessError::NotApplicable { .. }) => {}
            other => return Err(format!("{}: expected NotApplicable, got {other:?}", inst.label())),
        }
        let report = instance_diameter(&inst, DiameterOptions::default()).map_err(|e| e.to_string())?;
        let bound = inst.dim() * (inst.p() as usize - 1);
        ensure(report.overall_directed <= bound, || format!("{}: exceeds d(p-1)", inst.label()))?;
        parts.push(format!("{}={}", inst.label(), report.overall_directed));
    }
    Ok(format!("NotApplicable with diameters {}", parts.join(" ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("wreath-family diameters p(p-1)/2", criterion_1),
        ("sumset and BFS diameters agree", criterion_2),
        ("trivial bound d(p-1)", criterion_3),
        ("9d^3 certification", criterion_4),
        ("line identity for every alpha", criterion_5),
        ("binomial expansion of unipotents", criterion_6),
        ("power-sum solvability at desk scale", criterion_7),
        ("sumset against double loop", criterion_8),
        ("Singer negative control", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({:.2?}): {detail}", i + 1, start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
