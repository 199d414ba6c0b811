//! Command-line front end. `compute` renders the assembled functionals,
//! `audit` dumps the per-item derivations with checkpoint status, and
//! `verify` runs the oracle suites with seed-controlled randomness and
//! canonical, byte-stable report ordering.

use crate::clifford::{clifford_trace, CliffordGenerator, CliffordPolynomial, CliffordWord};
use crate::coefficients::{qm_eval, CoefficientQm};
use crate::functionals::{
    compute_p, compute_q, display_parts, render_report, render_vector, render_vector_24,
    wres_assemble, FunctionalName, FunctionalResult, OutputFormat,
};
use crate::oracle;
use crate::sphere::sphere_moment;
use crate::symbols::{
    ab_symbols, at_x0, compose_minus_2m, generalized_inverse_symbol, ConnectionTaylor,
};
use crate::tensor::{
    canonicalize_polynomial, project_to_basis, IndexLabel, InvariantVector, TensorFactor,
    TensorMonomial, TensorPolynomial,
};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CommandKind {
    Compute,
    Verify,
    Audit,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum FunctionalChoice {
    P,
    Q,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum FormatChoice {
    Plain,
    Latex,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Suite {
    Clifford,
    Sphere,
    Tensor,
    Symbols,
    Intermediates,
    Theorem,
    All,
}

/// Resolved run configuration; every command fills all fields.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub functional: FunctionalChoice,
    pub format: FormatChoice,
    pub suite: Suite,
    pub m_values: Vec<u32>,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Parser)]
#[command(
    name = "wres",
    about = "Exact derivation of the two spectral four-tensor functionals, \
             with per-item checkpoints, audits, and numeric verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Option<CliCommand>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Compute and render the assembled functionals.
    Compute {
        #[arg(long, value_enum, default_value = "both")]
        functional: FunctionalChoice,
        #[arg(long, value_enum, default_value = "plain")]
        format: FormatChoice,
    },
    /// Run a verification suite; exits nonzero on any failing case.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Half-dimension values for the numeric suites (repeatable).
        #[arg(long = "m")]
        m_values: Vec<u32>,
        #[arg(long, default_value_t = 20260822)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Print per-item derivations, projections, and checkpoint status.
    Audit {
        #[arg(long, value_enum, default_value = "both")]
        functional: FunctionalChoice,
    },
}

/// Parse the process arguments and run.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = i32::from(e.exit_code());
            let _ = e.print();
            return code;
        }
    };
    let config = match cli.command {
        None => RunConfig {
            command: CommandKind::Compute,
            functional: FunctionalChoice::Both,
            format: FormatChoice::Plain,
            suite: Suite::All,
            m_values: Vec::new(),
            seed: 20260822,
            tolerance: 1e-9,
        },
        Some(CliCommand::Compute { functional, format }) => RunConfig {
            command: CommandKind::Compute,
            functional,
            format,
            suite: Suite::All,
            m_values: Vec::new(),
            seed: 20260822,
            tolerance: 1e-9,
        },
        Some(CliCommand::Verify {
            suite,
            m_values,
            seed,
            tolerance,
        }) => RunConfig {
            command: CommandKind::Verify,
            functional: FunctionalChoice::Both,
            format: FormatChoice::Plain,
            suite,
            m_values,
            seed,
            tolerance,
        },
        Some(CliCommand::Audit { functional }) => RunConfig {
            command: CommandKind::Audit,
            functional,
            format: FormatChoice::Plain,
            suite: Suite::All,
            m_values: Vec::new(),
            seed: 20260822,
            tolerance: 1e-9,
        },
    };
    run(&config)
}

/// Execute a configuration; returns the process exit code
/// (0 success, 1 verification failure, 2 usage or internal error).
pub fn run(config: &RunConfig) -> i32 {
    if config.tolerance <= 0.0 {
        eprintln!("tolerance must be positive");
        return 2;
    }
    if config.m_values.iter().any(|m| !(1..=3).contains(m)) {
        eprintln!("m values must lie in 1..=3");
        return 2;
    }
    match config.command {
        CommandKind::Compute => run_compute(config),
        CommandKind::Audit => run_audit(config),
        CommandKind::Verify => run_verify(config),
    }
}

fn chosen(functional: FunctionalChoice) -> Vec<FunctionalName> {
    match functional {
        FunctionalChoice::P => vec![FunctionalName::P],
        FunctionalChoice::Q => vec![FunctionalName::Q],
        FunctionalChoice::Both => vec![FunctionalName::P, FunctionalName::Q],
    }
}

fn compute_by_name(name: FunctionalName) -> Result<FunctionalResult, crate::functionals::EngineError> {
    match name {
        FunctionalName::P => compute_p(),
        FunctionalName::Q => compute_q(),
    }
}

fn run_compute(config: &RunConfig) -> i32 {
    let format = match config.format {
        FormatChoice::Plain => OutputFormat::Plain,
        FormatChoice::Latex => OutputFormat::Latex,
        FormatChoice::Json => OutputFormat::Json,
    };
    let mut rendered = Vec::new();
    for name in chosen(config.functional) {
        match compute_by_name(name) {
            Ok(r) => rendered.push(wres_assemble(&r, format)),
            Err(e) => {
                eprintln!("computation failed: {e}");
                return 2;
            }
        }
    }
    if format == OutputFormat::Json && rendered.len() > 1 {
        // Wrap the per-functional objects into one array document.
        let values: Vec<serde_json::Value> = rendered
            .iter()
            .map(|t| serde_json::from_str(t).expect("own json"))
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Array(values)).expect("json")
        );
    } else {
        for text in rendered {
            println!("{text}");
        }
    }
    0
}

fn run_audit(config: &RunConfig) -> i32 {
    let mut failing: Option<String> = None;
    for name in chosen(config.functional) {
        let r = match compute_by_name(name) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("computation failed: {e}");
                return 2;
            }
        };
        println!("== functional {} ==", r.name.as_str());
        for item in &r.items {
            let cp = r.checkpoints.iter().find(|c| c.tag == item.tag).unwrap();
            println!("item {}", item.tag);
            println!("  terms at x0: {}", item.expr.terms.len());
            for line in item.integrand.lines() {
                println!("    {line}");
            }
            println!("  projected: {}", render_vector(&item.vector));
            println!("             {}", render_vector_24(&item.vector));
            if cp.matches {
                println!("  printed:   agrees");
            } else {
                println!("  printed:   {}", render_vector_24(&cp.printed));
                println!(
                    "  status:    MISMATCH, first differing slot {}",
                    cp.first_mismatch.unwrap()
                );
                if failing.is_none() {
                    failing = Some(format!("{}/{}", r.name.as_str(), item.tag));
                }
            }
        }
        println!("density:   {}", render_vector(&r.density));
        println!("           {}", render_vector_24(&r.density));
        let dcp = r.checkpoints.last().unwrap();
        if dcp.matches {
            println!("printed total agrees");
        } else {
            println!("printed total: {}", render_vector_24(&dcp.printed));
            if failing.is_none() {
                failing = Some(format!("{}/{}", r.name.as_str(), dcp.tag));
            }
        }
        let (pref, disp) = display_parts(&r);
        println!("assembled: {} x {{ ... }}", pref.render_plain());
        let _ = disp;
        match &r.report {
            Some(rep) => {
                println!();
                print!("{}", render_report(rep));
            }
            None => println!("no discrepancies against the printed tables"),
        }
        println!();
    }
    match failing {
        Some(tag) => {
            eprintln!("first mismatching checkpoint: {tag}");
            1
        }
        None => 0,
    }
}

/// One suite case with a canonical id.
struct Case {
    id: String,
    pass: bool,
    detail: String,
}

impl Case {
    fn ok(id: String, detail: String) -> Self {
        Case {
            id,
            pass: true,
            detail,
        }
    }
    fn fail(id: String, detail: String) -> Self {
        Case {
            id,
            pass: false,
            detail,
        }
    }
}

fn run_verify(config: &RunConfig) -> i32 {
    let suites: Vec<Suite> = match config.suite {
        Suite::All => vec![
            Suite::Clifford,
            Suite::Sphere,
            Suite::Tensor,
            Suite::Symbols,
            Suite::Intermediates,
            Suite::Theorem,
        ],
        s => vec![s],
    };
    let mut any_fail = false;
    let mut first_fail: Option<String> = None;
    for suite in suites {
        let (label, cases) = match suite {
            Suite::Clifford => ("clifford", suite_clifford(config)),
            Suite::Sphere => ("sphere", suite_sphere()),
            Suite::Tensor => ("tensor", suite_tensor(config)),
            Suite::Symbols => ("symbols", suite_symbols()),
            Suite::Intermediates => ("intermediates", suite_intermediates(config)),
            Suite::Theorem => ("theorem", suite_theorem()),
            Suite::All => unreachable!(),
        };
        let cases = match cases {
            Ok(c) => c,
            Err(e) => {
                eprintln!("suite {label} aborted: {e}");
                return 2;
            }
        };
        let mut failed = 0usize;
        for case in &cases {
            if case.pass {
                println!("[{label}] {}: pass {}", case.id, case.detail);
            } else {
                println!("[{label}] {}: FAIL {}", case.id, case.detail);
                failed += 1;
                if first_fail.is_none() {
                    first_fail = Some(case.id.clone());
                }
            }
        }
        println!(
            "[{label}] summary: {}/{} passed (seed {})",
            cases.len() - failed,
            cases.len(),
            config.seed
        );
        if failed > 0 {
            any_fail = true;
        }
    }
    if any_fail {
        if let Some(id) = first_fail {
            eprintln!("first failing case: {id}");
        }
        1
    } else {
        0
    }
}

/// Sum a fully contracted polynomial into one exact rational value at a
/// concrete half-dimension.
fn constant_value(p: &TensorPolynomial, m_value: i64) -> Result<(BigRational, BigRational), String> {
    let mut re = BigRational::zero();
    let mut im = BigRational::zero();
    for t in &p.terms {
        if !t.factors.is_empty() {
            return Err(format!("uncontracted factors remain in {:?}", t.factors));
        }
        let g = qm_eval(&t.coeff, m_value).map_err(|e| e.to_string())?;
        re += g.re;
        im += g.im;
    }
    Ok((re, im))
}

fn suite_clifford(config: &RunConfig) -> Result<Vec<Case>, String> {
    let ms: Vec<u32> = if config.m_values.is_empty() {
        vec![1, 2, 3]
    } else {
        config.m_values.clone()
    };
    let mut cases = Vec::new();
    for &m in &ms {
        let rep = oracle::gamma_rep(m as usize);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ u64::from(m));
        for w in 0..200 {
            let len = rng.gen_range(0..=8usize);
            let idxs: Vec<u32> = (0..len).map(|_| rng.gen_range(0..rep.n as u32)).collect();
            let id = format!("m{m}-w{w:03}");
            // Dense value.
            let mats: Vec<&ndarray::Array2<num_complex::Complex64>> =
                idxs.iter().map(|&i| &rep.gs[i as usize]).collect();
            let dense = oracle::numeric_trace(&rep, &mats);
            // Symbolic value.
            let word = CliffordWord::from_generators(
                idxs.iter()
                    .map(|&i| CliffordGenerator::BasisVec(IndexLabel::Concrete(i)))
                    .collect(),
            );
            let traced = clifford_trace(&CliffordPolynomial::from_word(word.clone()))
                .map_err(|e| e.to_string())?;
            let (re, im) = constant_value(&traced, i64::from(m))?;
            let sym_re = crate::coefficients::ratio_to_f64(&re);
            let sym_im = crate::coefficients::ratio_to_f64(&im);
            let dev = ((sym_re - dense.re).powi(2) + (sym_im - dense.im).powi(2)).sqrt();
            // Cyclic rotation must give the identical constant.
            let mut rot = idxs.clone();
            if !rot.is_empty() {
                rot.rotate_left(1);
            }
            let rot_word = CliffordWord::from_generators(
                rot.iter()
                    .map(|&i| CliffordGenerator::BasisVec(IndexLabel::Concrete(i)))
                    .collect(),
            );
            let rot_traced = clifford_trace(&CliffordPolynomial::from_word(rot_word))
                .map_err(|e| e.to_string())?;
            let (rot_re, rot_im) = constant_value(&rot_traced, i64::from(m))?;
            let cyclic_ok = rot_re == re && rot_im == im;
            let odd_ok = len % 2 == 0 || (re.is_zero() && im.is_zero());
            if dev <= 1e-9 && cyclic_ok && odd_ok {
                cases.push(Case::ok(id, format!("len {len} dev {dev:.1e}")));
            } else {
                cases.push(Case::fail(
                    id,
                    format!(
                        "len {len} dev {dev:.1e} cyclic {cyclic_ok} odd-zero {odd_ok} \
                         word {idxs:?}"
                    ),
                ));
            }
        }
    }
    Ok(cases)
}

/// Partitions of `d` into non-increasing positive parts.
fn partitions(d: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            prefix.push(part);
            go(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(d, d.max(1), &mut Vec::new(), &mut out);
    out
}

fn double_factorial(k: i64) -> BigInt {
    let mut v = BigInt::one();
    let mut x = k;
    while x > 1 {
        v *= BigInt::from(x);
        x -= 2;
    }
    v
}

fn suite_sphere() -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    for n in [4usize, 6, 8] {
        let m = (n / 2) as i64;
        for d in 0..=8usize {
            for part in partitions(d) {
                if part.len() > n {
                    continue;
                }
                let id = format!("n{n}-deg{d}-{part:?}");
                // Concrete index list: part[i] copies of index i.
                let mut labels = Vec::new();
                for (i, &count) in part.iter().enumerate() {
                    for _ in 0..count {
                        labels.push(IndexLabel::Concrete(i as u32));
                    }
                }
                let moment = sphere_moment(&labels);
                let canon = canonicalize_polynomial(&moment.result, false)
                    .map_err(|e| e.to_string())?;
                let (re, im) = constant_value(&canon, m)?;
                // Closed form: zero unless every count is even, else the
                // double-factorial product over prod_k (n + 2k).
                let closed = if part.iter().any(|&c| c % 2 == 1) {
                    BigRational::zero()
                } else {
                    let half = (d / 2) as i64;
                    let mut num = BigInt::one();
                    for &count in &part {
                        num *= double_factorial(count as i64 - 1);
                    }
                    let mut den = BigInt::one();
                    for k in 0..half {
                        den *= BigInt::from(n as i64 + 2 * k);
                    }
                    BigRational::new(num, den)
                };
                if re == closed && im.is_zero() {
                    cases.push(Case::ok(id, format!("= {closed}")));
                } else {
                    cases.push(Case::fail(
                        id,
                        format!("recursion {re} vs closed form {closed}"),
                    ));
                }
            }
        }
    }
    Ok(cases)
}

/// The eight signed slot permutations of the curvature tensor.
const RIEM_SYMMETRIES: [([usize; 4], i64); 8] = [
    ([0, 1, 2, 3], 1),
    ([1, 0, 2, 3], -1),
    ([0, 1, 3, 2], -1),
    ([1, 0, 3, 2], 1),
    ([2, 3, 0, 1], 1),
    ([3, 2, 0, 1], -1),
    ([2, 3, 1, 0], -1),
    ([3, 2, 1, 0], 1),
];

fn riem_on_u(
    riem_slots: [IndexLabel; 4],
    u_attach: [IndexLabel; 4],
    u_perm: &[usize; 4],
) -> TensorPolynomial {
    let mut factors = vec![TensorFactor::Riem(
        riem_slots[0],
        riem_slots[1],
        riem_slots[2],
        riem_slots[3],
    )];
    for (k, &lab) in u_perm.iter().enumerate() {
        factors.push(TensorFactor::U(k as u8 + 1, u_attach[lab]));
    }
    TensorPolynomial::from_monomial(TensorMonomial::new(CoefficientQm::one(), factors))
}

fn project(p: &TensorPolynomial) -> Result<InvariantVector, String> {
    let canon = canonicalize_polynomial(p, false).map_err(|e| e.to_string())?;
    project_to_basis(&canon).map_err(|e| e.to_string())
}

fn suite_tensor(config: &RunConfig) -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    // Monoterm symmetries: a permuted curvature factor projects to the
    // signed image of the unpermuted one.
    for case_no in 0..50 {
        let labels = [
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
        ];
        let mut u_perm = [0usize, 1, 2, 3];
        for i in (1..4).rev() {
            let j = rng.gen_range(0..=i);
            u_perm.swap(i, j);
        }
        let (sym, sign) = RIEM_SYMMETRIES[rng.gen_range(0..8)];
        let base = project(&riem_on_u(labels, labels, &u_perm))?;
        let permuted_labels = [
            labels[sym[0]],
            labels[sym[1]],
            labels[sym[2]],
            labels[sym[3]],
        ];
        let varied = project(&riem_on_u(permuted_labels, labels, &u_perm))?;
        let signed = base.scale(&CoefficientQm::from_int(sign));
        let id = format!("symmetry-{case_no:02}");
        if varied.coefficients == signed.coefficients {
            cases.push(Case::ok(id, format!("{sym:?} sign {sign:+}")));
        } else {
            cases.push(Case::fail(
                id,
                format!(
                    "{sym:?} sign {sign:+}: {} vs {}",
                    render_vector(&varied),
                    render_vector(&signed)
                ),
            ));
        }
    }
    // First cyclic identity: the three-term cyclic sum projects to zero.
    for case_no in 0..50 {
        let labels = [
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
        ];
        let mut u_perm = [0usize, 1, 2, 3];
        for i in (1..4).rev() {
            let j = rng.gen_range(0..=i);
            u_perm.swap(i, j);
        }
        let cyc1 = [labels[0], labels[1], labels[2], labels[3]];
        let cyc2 = [labels[0], labels[2], labels[3], labels[1]];
        let cyc3 = [labels[0], labels[3], labels[1], labels[2]];
        let total = riem_on_u(cyc1, labels, &u_perm)
            .add(&riem_on_u(cyc2, labels, &u_perm))
            .add(&riem_on_u(cyc3, labels, &u_perm));
        let v = project(&total)?;
        let id = format!("bianchi-{case_no:02}");
        if v.is_zero() {
            cases.push(Case::ok(id, "cyclic sum -> 0".into()));
        } else {
            cases.push(Case::fail(id, render_vector(&v)));
        }
    }
    // Frame traces.
    {
        let f = IndexLabel::fresh();
        let p = TensorPolynomial::from_monomial(TensorMonomial::new(
            CoefficientQm::one(),
            vec![TensorFactor::Delta(f, f)],
        ));
        let canon = canonicalize_polynomial(&p, false).map_err(|e| e.to_string())?;
        let ok = canon.terms.len() == 1
            && canon.terms[0].factors.is_empty()
            && canon.terms[0].coeff == CoefficientQm::affine_over(2, 0, 1);
        cases.push(if ok {
            Case::ok("delta-trace".into(), "delta(f,f) = 2m".into())
        } else {
            Case::fail("delta-trace".into(), "delta(f,f) != 2m".into())
        });
        let (a, b) = (IndexLabel::fresh(), IndexLabel::fresh());
        let p = TensorPolynomial::from_monomial(TensorMonomial::new(
            CoefficientQm::one(),
            vec![TensorFactor::Ric(a, b), TensorFactor::Delta(a, b)],
        ));
        let canon = canonicalize_polynomial(&p, false).map_err(|e| e.to_string())?;
        let ok = canon.terms.len() == 1
            && canon.terms[0].factors == vec![TensorFactor::ScalarS]
            && canon.terms[0].coeff == CoefficientQm::one();
        cases.push(if ok {
            Case::ok("ricci-trace".into(), "Ric contracted with delta = s".into())
        } else {
            Case::fail("ricci-trace".into(), "Ric delta contraction failed".into())
        });
    }
    // Numeric faithfulness of canonicalization.
    for n in [4usize, 6] {
        let d = oracle::random_draw(n, &mut rng);
        for case_no in 0..20 {
            let labels = [
                IndexLabel::fresh(),
                IndexLabel::fresh(),
                IndexLabel::fresh(),
                IndexLabel::fresh(),
            ];
            let mut u_perm = [0usize, 1, 2, 3];
            for i in (1..4).rev() {
                let j = rng.gen_range(0..=i);
                u_perm.swap(i, j);
            }
            let (sym, _) = RIEM_SYMMETRIES[rng.gen_range(0..8)];
            let permuted = [
                labels[sym[0]],
                labels[sym[1]],
                labels[sym[2]],
                labels[sym[3]],
            ];
            let poly = riem_on_u(permuted, labels, &u_perm);
            let canon = canonicalize_polynomial(&poly, false).map_err(|e| e.to_string())?;
            let v0 = oracle::eval_tensor_polynomial(&poly, &d, (n / 2) as i64)
                .map_err(|e| e.to_string())?;
            let v1 = oracle::eval_tensor_polynomial(&canon, &d, (n / 2) as i64)
                .map_err(|e| e.to_string())?;
            let dev = (v0 - v1).norm();
            let id = format!("n{n}-numeric-{case_no:02}");
            if dev <= 1e-12 {
                cases.push(Case::ok(id, format!("dev {dev:.1e}")));
            } else {
                cases.push(Case::fail(id, format!("dev {dev:.1e}")));
            }
        }
    }
    Ok(cases)
}

fn suite_symbols() -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    // Order-0 symbol of the two-factor product at x0: exactly one
    // curvature term survives the connection cancellation.
    {
        let [s2, s1, s0] = ab_symbols((1, 2), (3, 4)).map_err(|e| e.to_string())?;
        let at0 = at_x0(&s0).map_err(|e| e.to_string())?;
        let ok = at0.terms.len() == 1
            && at0.terms[0]
                .tensor
                .factors
                .iter()
                .any(|f| matches!(f, TensorFactor::Riem(..)));
        cases.push(if ok {
            Case::ok(
                "order0-cancellation".into(),
                "single curvature term at x0".into(),
            )
        } else {
            Case::fail("order0-cancellation".into(), format!("{} terms", at0.terms.len()))
        });
        let w_terms = s1
            .terms
            .iter()
            .filter(|t| !t.w_factors.is_empty())
            .count();
        let du_terms = s1
            .terms
            .iter()
            .filter(|t| !t.du_factors.is_empty())
            .count();
        let ok = w_terms == 2 && du_terms == 2 && w_terms + du_terms == s1.terms.len();
        cases.push(if ok {
            Case::ok(
                "order1-structure".into(),
                "two connection terms and two derivative terms, nothing bare".into(),
            )
        } else {
            Case::fail(
                "order1-structure".into(),
                format!("w {w_terms} du {du_terms} total {}", s1.terms.len()),
            )
        });
        let _ = s2;
    }
    // Composition summand audits for both functionals: homogeneity is
    // checked inside the composer; the evaluation-killed summands must be
    // empty.
    {
        let [s2, s1, s0] = ab_symbols((1, 2), (3, 4)).map_err(|e| e.to_string())?;
        let mut left = BTreeMap::new();
        left.insert(2i64, s2);
        left.insert(1i64, s1);
        left.insert(0i64, s0);
        let dirac = &ConnectionTaylor::Dirac;
        let right = [
            generalized_inverse_symbol(1, 0, 0, dirac).map_err(|e| e.to_string())?,
            generalized_inverse_symbol(1, 0, 1, dirac).map_err(|e| e.to_string())?,
            generalized_inverse_symbol(1, 0, 2, dirac).map_err(|e| e.to_string())?,
        ];
        let summands = compose_minus_2m(&left, &right, 0).map_err(|e| e.to_string())?;
        cases.push(Case::ok(
            "homogeneity".into(),
            format!("{} summands pass the xi-order audit", summands.len()),
        ));
        for (tag, key) in [("II-2", (1i64, 0u8, 1u8)), ("II-5", (1, 1, 0))] {
            let s = summands
                .iter()
                .find(|s| (s.left_order, s.derivatives, s.right_offset) == key)
                .ok_or("missing summand")?;
            cases.push(if s.expr.is_zero() {
                Case::ok(
                    format!("structural-zero-{tag}"),
                    "empty after evaluation at x0".into(),
                )
            } else {
                Case::fail(format!("structural-zero-{tag}"), "terms survived".into())
            });
        }
    }
    // Flat model: every surviving composed term carries explicit curvature.
    {
        let flat = &ConnectionTaylor::Flat;
        let [s2, s1, s0] = ab_symbols((1, 2), (3, 4)).map_err(|e| e.to_string())?;
        let mut left = BTreeMap::new();
        left.insert(2i64, s2);
        left.insert(1i64, s1);
        left.insert(0i64, s0);
        let right = [
            generalized_inverse_symbol(1, 0, 0, flat).map_err(|e| e.to_string())?,
            generalized_inverse_symbol(1, 0, 1, flat).map_err(|e| e.to_string())?,
            generalized_inverse_symbol(1, 0, 2, flat).map_err(|e| e.to_string())?,
        ];
        let summands = compose_minus_2m(&left, &right, 0).map_err(|e| e.to_string())?;
        let bare = summands
            .iter()
            .flat_map(|s| &s.expr.terms)
            .filter(|t| {
                !t.tensor
                    .factors
                    .iter()
                    .any(|f| matches!(f, TensorFactor::Riem(..)))
            })
            .count();
        cases.push(if bare == 0 {
            Case::ok(
                "flat-model".into(),
                "no curvature-free term survives".into(),
            )
        } else {
            Case::fail("flat-model".into(), format!("{bare} curvature-free terms"))
        });
    }
    Ok(cases)
}

fn suite_intermediates(config: &RunConfig) -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    for name in [FunctionalName::P, FunctionalName::Q] {
        let r = compute_by_name(name).map_err(|e| e.to_string())?;
        for cp in &r.checkpoints {
            let id = format!("{}/{}", r.name.as_str(), cp.tag);
            if cp.matches {
                cases.push(Case::ok(id, "matches the printed value".into()));
            } else {
                let slot = cp.first_mismatch.unwrap();
                cases.push(Case::fail(
                    id,
                    format!(
                        "first differing slot {slot}: printed {}, derived {}",
                        cp.printed.coefficients[slot], cp.derived.coefficients[slot]
                    ),
                ));
            }
        }
        if let Some(rep) = &r.report {
            cases.push(Case::ok(
                format!("{}/report", r.name.as_str()),
                format!(
                    "discrepancy report pinpoints {} slot {}",
                    rep.checkpoint, rep.slot
                ),
            ));
        }
    }
    // Short numeric sanity at m=2: engine items vs dense recomputation.
    let out = oracle::cross_check(2, 2, config.seed, config.tolerance)
        .map_err(|e| e.to_string())?;
    cases.push(if out.ok {
        Case::ok(
            "numeric-m2".into(),
            format!("2 draws, max rel {:.1e}", out.max_rel),
        )
    } else {
        Case::fail(
            "numeric-m2".into(),
            format!("max rel {:.1e} over tolerance", out.max_rel),
        )
    });
    Ok(cases)
}

fn suite_theorem() -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    for name in [FunctionalName::P, FunctionalName::Q] {
        let r = compute_by_name(name).map_err(|e| e.to_string())?;
        let density_cp = r.checkpoints.last().unwrap();
        let id = r.name.as_str().to_string();
        if density_cp.matches {
            cases.push(Case::ok(id, "match".into()));
        } else {
            let first_item = r
                .checkpoints
                .iter()
                .find(|c| !c.matches)
                .map(|c| c.tag.clone())
                .unwrap();
            cases.push(Case::fail(id, format!("mismatch (first at {first_item})")));
            if let Some(rep) = &r.report {
                print!("{}", render_report(rep));
            }
        }
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: CommandKind, suite: Suite) -> RunConfig {
        RunConfig {
            command,
            functional: FunctionalChoice::Both,
            format: FormatChoice::Plain,
            suite,
            m_values: vec![],
            seed: 20260822,
            tolerance: 1e-9,
        }
    }

    #[test]
    fn clifford_suite_all_pass() {
        let mut config = cfg(CommandKind::Verify, Suite::Clifford);
        config.m_values = vec![1, 2];
        let cases = suite_clifford(&config).unwrap();
        assert_eq!(cases.len(), 400);
        assert!(cases.iter().all(|c| c.pass), "{:?}", first_fail(&cases));
    }

    #[test]
    fn sphere_suite_all_pass() {
        let cases = suite_sphere().unwrap();
        assert!(cases.len() > 100);
        assert!(cases.iter().all(|c| c.pass), "{:?}", first_fail(&cases));
    }

    #[test]
    fn tensor_suite_all_pass() {
        let config = cfg(CommandKind::Verify, Suite::Tensor);
        let cases = suite_tensor(&config).unwrap();
        assert!(cases.iter().all(|c| c.pass), "{:?}", first_fail(&cases));
    }

    #[test]
    fn symbols_suite_all_pass() {
        let cases = suite_symbols().unwrap();
        assert!(cases.iter().all(|c| c.pass), "{:?}", first_fail(&cases));
    }

    #[test]
    fn intermediates_suite_flags_only_known_rows() {
        let config = cfg(CommandKind::Verify, Suite::Intermediates);
        let cases = suite_intermediates(&config).unwrap();
        let failing: Vec<&str> = cases
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.id.as_str())
            .collect();
        assert_eq!(
            failing,
            vec![
                "Q/II-1",
                "Q/II-3-A",
                "Q/II-3-C",
                "Q/II-3",
                "Q/II-4-A",
                "Q/II-4",
                "Q/II-6",
                "Q/Q-density",
            ]
        );
        assert!(cases.iter().any(|c| c.id == "numeric-m2" && c.pass));
    }

    #[test]
    fn theorem_suite_reports_p_match_q_mismatch() {
        let cases = suite_theorem().unwrap();
        assert_eq!(cases.len(), 2);
        assert!(cases[0].pass);
        assert!(!cases[1].pass);
        assert_eq!(cases[1].detail, "mismatch (first at II-1)");
    }

    #[test]
    fn run_exit_codes() {
        let mut c = cfg(CommandKind::Verify, Suite::Theorem);
        assert_eq!(run(&c), 1);
        c = cfg(CommandKind::Compute, Suite::All);
        assert_eq!(run(&c), 0);
        c.tolerance = -1.0;
        assert_eq!(run(&c), 2);
        c = cfg(CommandKind::Verify, Suite::Clifford);
        c.m_values = vec![4];
        assert_eq!(run(&c), 2);
        c = cfg(CommandKind::Verify, Suite::Symbols);
        assert_eq!(run(&c), 0);
    }

    fn first_fail<'a>(cases: &'a [Case]) -> Option<(&'a str, &'a str)> {
        cases
            .iter()
            .find(|c| !c.pass)
            .map(|c| (c.id.as_str(), c.detail.as_str()))
    }
}
