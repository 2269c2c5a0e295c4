//! Named verification cases: each regenerates a bundled scenario and diffs
//! the rendered report against checked-in expected output.

use crate::audit::forced::{
    derive_forced_allocations, verify_first_mover_contradiction, EquityForcing,
};
use crate::audit::{audit_rule, AuditError, Property};
use crate::core::{AgentId, LinearOrder, Preference, Profile};
use crate::domains::{derive_single_peaked_order, enumerate_single_peaked, Domain, ProfileSpace};
use crate::fairness::{
    acclaimed_agent, acclaimed_pair, partition, satisfies_eba, satisfies_eba_plus, satisfies_eua,
};
use crate::games::{greedy_plans, prune, three_agent_millipede, verify_osp_implementation};
use crate::rules::{crawler, designator, ttc, Rule};

/// The bundled case identifiers, in canonical order.
pub const CASE_IDS: [&str; 8] = [
    "table1",
    "example2",
    "example3",
    "example4",
    "theorem1_necessity",
    "theorem2",
    "theorem3",
    "figure1",
];

/// A regenerated case next to its checked-in expectation.
#[derive(Clone, Debug)]
pub struct CaseReport {
    pub case: String,
    pub expected: String,
    pub actual: String,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }

    /// Line-oriented diff of expectation versus regeneration.
    pub fn diff(&self) -> String {
        let mut out = String::new();
        let expected: Vec<&str> = self.expected.lines().collect();
        let actual: Vec<&str> = self.actual.lines().collect();
        for i in 0..expected.len().max(actual.len()) {
            let e = expected.get(i).copied().unwrap_or("<missing>");
            let a = actual.get(i).copied().unwrap_or("<missing>");
            if e != a {
                out.push_str(&format!("line {}:\n  expected: {e}\n  actual:   {a}\n", i + 1));
            }
        }
        out
    }
}

/// Regenerates the named case and compares it with the bundled expectation.
pub fn reproduce(case: &str) -> Result<CaseReport, AuditError> {
    let (expected, actual) = match case {
        "table1" => (include_str!("../../golden/table1.txt"), case_table1()?),
        "example2" => (include_str!("../../golden/example2.txt"), case_example2()?),
        "example3" => (include_str!("../../golden/example3.txt"), case_example3()?),
        "example4" => (include_str!("../../golden/example4.txt"), case_example4()?),
        "theorem1_necessity" => (
            include_str!("../../golden/theorem1_necessity.txt"),
            case_theorem1_necessity()?,
        ),
        "theorem2" => (include_str!("../../golden/theorem2.txt"), case_theorem2()?),
        "theorem3" => (include_str!("../../golden/theorem3.txt"), case_theorem3()?),
        "figure1" => (include_str!("../../golden/figure1.txt"), case_figure1()?),
        other => return Err(AuditError::UnknownCase(other.to_string())),
    };
    Ok(CaseReport { case: case.to_string(), expected: expected.to_string(), actual })
}

fn pref_human(p: &Preference) -> String {
    let parts: Vec<String> = p.ranking().iter().map(|o| o.to_string()).collect();
    format!("[{}]", parts.join(" > "))
}

fn profile_human(p: &Profile) -> String {
    let parts: Vec<String> = p.prefs().iter().map(pref_human).collect();
    format!("({})", parts.join(", "))
}

// Three agents, objects o_1 < o_2 < o_3. P has everyone single-peaked; P'
// flips the third agent to a non-single-peaked report.
fn table1_profiles() -> (Profile, Profile) {
    let p = Profile::from_rows(&[&[2, 1, 0], &[0, 1, 2], &[0, 1, 2]]).unwrap();
    let pp = Profile::from_rows(&[&[2, 1, 0], &[0, 1, 2], &[0, 2, 1]]).unwrap();
    (p, pp)
}

/// Five preferences over three objects: rich (both top-two swaps present,
/// plus a completely reversed pair) but not single-peaked.
fn five_pref_domain() -> Domain {
    Domain::from_rows(&[&[0, 2, 1], &[0, 1, 2], &[1, 0, 2], &[2, 1, 0], &[1, 2, 0]]).unwrap()
}

/// Four single-peaked preferences; the two low agents chase o_4 and the two
/// high agents chase o_1, making agents 1 and 4 the acclaimed pair.
fn table4_profile() -> Profile {
    Profile::from_rows(&[&[3, 2, 1, 0], &[3, 2, 1, 0], &[0, 1, 2, 3], &[0, 1, 2, 3]]).unwrap()
}

/// Derivation space and restricted sub-domains for the three-agent
/// unanimous-acclaim certificate.
pub(crate) fn theorem1_spaces() -> (ProfileSpace, Vec<Domain>) {
    let derivation = vec![
        Domain::from_rows(&[&[1, 2, 0], &[2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 2, 1], &[0, 1, 2], &[2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 2, 1], &[0, 1, 2], &[1, 2, 0]]).unwrap(),
    ];
    let restricted = vec![
        Domain::from_rows(&[&[1, 2, 0], &[2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 2, 1], &[2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 1, 2], &[1, 2, 0]]).unwrap(),
    ];
    (ProfileSpace::new(derivation).unwrap(), restricted)
}

/// Derivation space and restricted sub-domains for the four-agent
/// bipartite-acclaim certificate.
pub(crate) fn theorem3_spaces() -> (ProfileSpace, Vec<Domain>) {
    let derivation = vec![
        Domain::from_rows(&[&[2, 1, 0, 3], &[3, 2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[2, 1, 0, 3], &[2, 3, 1, 0], &[3, 2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 1, 2, 3], &[1, 0, 2, 3], &[1, 2, 3, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 1, 2, 3], &[1, 2, 3, 0]]).unwrap(),
    ];
    let restricted = vec![
        Domain::from_rows(&[&[2, 1, 0, 3], &[3, 2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[2, 3, 1, 0], &[3, 2, 1, 0]]).unwrap(),
        Domain::from_rows(&[&[0, 1, 2, 3], &[1, 0, 2, 3]]).unwrap(),
        Domain::from_rows(&[&[0, 1, 2, 3], &[1, 2, 3, 0]]).unwrap(),
    ];
    (ProfileSpace::new(derivation).unwrap(), restricted)
}

fn case_table1() -> Result<String, AuditError> {
    let order = LinearOrder::identity(3);
    let (p, pp) = table1_profiles();
    let (cp, _) = crawler(&p, &order)?;
    let (cpp, _) = crawler(&pp, &order)?;
    let t = ttc(&p);
    Ok(format!(
        "crawler{} = {}\ncrawler{} = {}\nttc{} = {}\n",
        profile_human(&p),
        cp.human(),
        profile_human(&pp),
        cpp.human(),
        profile_human(&p),
        t.human()
    ))
}

fn case_example2() -> Result<String, AuditError> {
    let dom = five_pref_domain();
    let mut out = String::new();
    out.push_str(&format!("domain size = {}\n", dom.len()));
    out.push_str(&format!("rich = {}\n", crate::domains::is_rich(&dom)));
    match derive_single_peaked_order(&dom) {
        Ok(order) => out.push_str(&format!("single-peaked under {order:?}\n")),
        Err(w) => out.push_str(&format!("order recovery fails: {w}\n")),
    }
    let order = LinearOrder::identity(3);
    let profile = Profile::from_rows(&[&[2, 1, 0], &[0, 1, 2], &[0, 2, 1]]).unwrap();
    let (alloc, _) = crawler(&profile, &order)?;
    out.push_str(&format!("crawler{} = {}\n", profile_human(&profile), alloc.human()));
    let agent = acclaimed_agent(&profile).expect("acclaimed agent exists here");
    let part = partition(&profile);
    let favorite =
        profile.pref(agent).best_in(part.active_objects.iter().copied()).expect("nonempty");
    out.push_str(&format!("acclaimed agent = {agent}, favorite active object = {favorite}\n"));
    out.push_str(&format!("eua = {}\n", satisfies_eua(&alloc, &profile)));
    Ok(out)
}

fn case_example3() -> Result<String, AuditError> {
    let order = LinearOrder::identity(4);
    let p = table4_profile();
    let (alloc, _) = crawler(&p, &order)?;
    let mut out = String::new();
    out.push_str(&format!("crawler{} = {}\n", profile_human(&p), alloc.human()));
    out.push_str(&format!(
        "acclaimed agent = {}\n",
        match acclaimed_agent(&p) {
            Some(a) => a.to_string(),
            None => "none".to_string(),
        }
    ));
    let pair = acclaimed_pair(&p).expect("acclaimed pair exists here");
    let group = |g: &std::collections::BTreeSet<AgentId>| {
        let names: Vec<String> = g.iter().map(|a| a.to_string()).collect();
        format!("{{{}}}", names.join(", "))
    };
    out.push_str(&format!(
        "acclaimed pair = ({}, {}), supporters of {} = {}, supporters of {} = {}\n",
        pair.i,
        pair.j,
        pair.i.endowment(),
        group(&pair.group_i),
        pair.j.endowment(),
        group(&pair.group_j),
    ));
    out.push_str(&format!("eba = {}\n", satisfies_eba(&alloc, &p)));
    Ok(out)
}

fn case_example4() -> Result<String, AuditError> {
    let order = LinearOrder::identity(4);
    let p = table4_profile();
    let (alloc, trace) = designator(&p, &order)?;
    let mut out = trace.human();
    out.push('\n');
    out.push_str(&format!("designator{} = {}\n", profile_human(&p), alloc.human()));
    out.push_str(&format!("eba = {}\n", satisfies_eba(&alloc, &p)));
    out.push_str(&format!("eba_plus = {}\n", satisfies_eba_plus(&alloc, &p)));
    Ok(out)
}

fn render_certificate(
    space: &ProfileSpace,
    equity: EquityForcing,
    restricted: &[Domain],
    targets: &[Vec<&[usize]>],
) -> Result<String, AuditError> {
    let facts = derive_forced_allocations(space, equity, &[])?;
    let mut out = String::from("forced allocations:\n");
    for rows in targets {
        let key: Vec<usize> = rows
            .iter()
            .enumerate()
            .map(|(a, r)| {
                let pref = Preference::from_indices(r).expect("valid ranking");
                space
                    .domain(a)
                    .prefs()
                    .iter()
                    .position(|q| q == &pref)
                    .expect("target preference present in the derivation domain")
            })
            .collect();
        let profile = space.profile_for(&key);
        match facts.allocation_at(&key, space.agents()) {
            Some(alloc) => out.push_str(&format!(
                "f{} = {}\n",
                profile_human(&profile),
                alloc.human()
            )),
            None => out.push_str(&format!(
                "f{} = underivable ({} facts)\n",
                profile_human(&profile),
                facts.at_profile(&key).len()
            )),
        }
    }
    let cert = verify_first_mover_contradiction(&facts, space, restricted)?;
    out.push_str("first-mover contradictions:\n");
    for (a, list) in cert.witnesses.iter().enumerate() {
        match list.first() {
            None => out.push_str(&format!("agent {}: none\n", AgentId(a))),
            Some(w) => {
                let tp = Preference::from_indices(&w.truthful_pref).expect("ranking");
                let dp = Preference::from_indices(&w.deviation_pref).expect("ranking");
                out.push_str(&format!(
                    "agent {}: {} witnesses; truth {} gets {}, deviation {} gets {}, {} beats {} under truth\n",
                    AgentId(a),
                    list.len(),
                    pref_human(&tp),
                    w.truthful_object,
                    pref_human(&dp),
                    w.deviation_object,
                    w.deviation_object,
                    w.truthful_object,
                ));
            }
        }
    }
    if cert.complete() {
        out.push_str("certificate complete: every agent contradicts obvious dominance at the root\n");
    }
    Ok(out)
}

fn case_theorem1_necessity() -> Result<String, AuditError> {
    let (space, restricted) = theorem1_spaces();
    let targets: Vec<Vec<&[usize]>> = vec![
        vec![&[2, 1, 0], &[0, 2, 1], &[0, 2, 1]],
        vec![&[2, 1, 0], &[0, 2, 1], &[0, 1, 2]],
        vec![&[1, 2, 0], &[0, 1, 2], &[0, 1, 2]],
        vec![&[1, 2, 0], &[0, 2, 1], &[0, 1, 2]],
        vec![&[1, 2, 0], &[2, 1, 0], &[1, 2, 0]],
    ];
    let mut out = render_certificate(&space, EquityForcing::Eua, &restricted, &targets)?;
    match derive_single_peaked_order(&five_pref_domain()) {
        Ok(order) => out.push_str(&format!("five-preference domain: accepted under {order:?}\n")),
        Err(w) => out.push_str(&format!("five-preference domain rejected: {w}\n")),
    }
    Ok(out)
}

fn case_theorem2() -> Result<String, AuditError> {
    let order = LinearOrder::identity(4);
    let space = ProfileSpace::shared(enumerate_single_peaked(&order));
    let props = [
        Property::Ir,
        Property::Eff,
        Property::Sp,
        Property::Eua,
        Property::Eba,
        Property::DynIr,
    ];
    let report = audit_rule(&Rule::Designator(order), &space, &props, false, 1)?;
    let mut out = String::new();
    out.push_str(&format!("rule = {}\n", report.rule));
    out.push_str("domain = all single-peaked preferences, n = 4, natural order\n");
    out.push_str(&format!("profiles = {}\n", report.profiles));
    for r in &report.results {
        out.push_str(&format!(
            "{}: {}\n",
            r.property,
            if r.pass { "pass" } else { "fail" }
        ));
    }
    Ok(out)
}

fn case_theorem3() -> Result<String, AuditError> {
    let (space, restricted) = theorem3_spaces();
    let targets: Vec<Vec<&[usize]>> = vec![
        vec![&[3, 2, 1, 0], &[3, 2, 1, 0], &[0, 1, 2, 3], &[0, 1, 2, 3]],
        vec![&[2, 1, 0, 3], &[2, 3, 1, 0], &[0, 1, 2, 3], &[0, 1, 2, 3]],
        vec![&[3, 2, 1, 0], &[3, 2, 1, 0], &[1, 0, 2, 3], &[1, 2, 3, 0]],
        vec![&[3, 2, 1, 0], &[2, 3, 1, 0], &[1, 0, 2, 3], &[1, 2, 3, 0]],
        vec![&[2, 1, 0, 3], &[2, 3, 1, 0], &[1, 0, 2, 3], &[0, 1, 2, 3]],
    ];
    render_certificate(&space, EquityForcing::EbaPlus, &restricted, &targets)
}

fn case_figure1() -> Result<String, AuditError> {
    let game = three_agent_millipede();
    let order = LinearOrder::identity(3);
    let domains = vec![five_pref_domain(); 3];
    let plans = greedy_plans(&game, &domains)?;
    let pruned = prune(&game, &plans)?;
    let pruned_plans = greedy_plans(&pruned, &domains)?;
    let report = verify_osp_implementation(
        &pruned,
        &pruned_plans,
        |p| crawler(p, &order).map(|(a, _)| a),
        &domains,
    )?;
    let mut out = String::new();
    out.push_str(&format!("millipede game: {} nodes\n", game.len()));
    out.push_str(&format!(
        "play equality with crawler: {}/{} profiles\n",
        report.profiles_checked - report.outcome_mismatches.len(),
        report.profiles_checked
    ));
    out.push_str(&format!(
        "obvious dominance: {}/{} strategies\n",
        report.dominance_checks - report.dominance_violations.len(),
        report.dominance_checks
    ));
    let profile = Profile::from_rows(&[&[2, 1, 0], &[0, 1, 2], &[0, 2, 1]]).unwrap();
    let (alloc, _) = crawler(&profile, &order)?;
    out.push_str(&format!(
        "crawler{} = {}, eua = {}\n",
        profile_human(&profile),
        alloc.human(),
        satisfies_eua(&alloc, &profile)
    ));
    Ok(out)
}
