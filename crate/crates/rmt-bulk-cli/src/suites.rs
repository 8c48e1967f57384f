use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rayon::ThreadPool;
use rmt_bulk::appendix::{verify_h_integral_with, verify_l_bound_with, BoundLedger};
use rmt_bulk::asymptotics::{h_structure_check, mrs_leading, theta_eval, theta_ode_check, HFunction, IqTable};
use rmt_bulk::limits::{bound, build_t, det_report, routes_for};
use rmt_bulk::riccati::{linspace, riccati_residual, y_m_profile, YmEvaluator};
use rmt_bulk::universality::{gap_probability, scaled_kernel_error, uniform_grid, GapMode, GapSpec};
use rmt_bulk::widom::{build_blocks, cd_kernel, s_beta1, s_beta4, section_identity_check};
use rmt_bulk::PhiBasis;

use crate::cache::{key_string, Cache};
use crate::config::{BasisPlan, RunConfig, Suite};
use crate::output::{text, write_text, Cell, Table};
use crate::Result;

pub(crate) struct Outcome {
    pub pass: bool,
    pub detail: String,
    pub outputs: Vec<String>,
}

pub(crate) struct Context<'a> {
    pub config: &'a RunConfig,
    pub cache: Cache,
    pub pool: ThreadPool,
    bases: Mutex<BTreeMap<String, Arc<PhiBasis>>>,
    pub cache_keys: Mutex<BTreeSet<String>>,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a RunConfig, pool: ThreadPool) -> Self {
        Self {
            config,
            cache: Cache::new(config.cache_dir()),
            pool,
            bases: Mutex::new(BTreeMap::new()),
            cache_keys: Mutex::new(BTreeSet::new()),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn basis(&self, plan: &BasisPlan) -> Result<Arc<PhiBasis>> {
        if let Some(b) = self.bases.lock().unwrap().get(&plan.tag) {
            return Ok(b.clone());
        }
        let bits = self.config.precision_bits;
        let (basis, table, id, _) = self.cache.basis(&plan.potential, plan.jmax, bits)?;
        self.cache_keys.lock().unwrap().insert(format!("{id} {}", key_string(&table.key())));
        let b = Arc::new(basis);
        self.bases.lock().unwrap().insert(plan.tag.clone(), b.clone());
        Ok(b)
    }

    /// Runs `f` over `items` on the job pool; results keep the order of `items`.
    fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
        self.pool.install(|| items.par_iter().map(&f).collect())
    }

    fn plans_by_n(&self) -> Result<Vec<(BasisPlan, usize)>> {
        let mut out = Vec::new();
        for p in self.config.basis_plans()? {
            for &n in &self.config.n {
                out.push((p.clone(), n));
            }
        }
        Ok(out)
    }
}

pub(crate) fn run(ctx: &Context, suite: Suite) -> Result<Outcome> {
    match suite {
        Suite::Recurrence => recurrence(ctx),
        Suite::Kernel => kernel(ctx),
        Suite::Limits => limits(ctx),
        Suite::Dets => dets(ctx),
        Suite::Riccati => riccati(ctx),
        Suite::Appendix => appendix(ctx),
        Suite::Universality => universality(ctx),
    }
}

struct Part {
    pass: bool,
    detail: String,
    outputs: Vec<String>,
}

fn combine(parts: Vec<Part>) -> Outcome {
    Outcome {
        pass: parts.iter().all(|p| p.pass),
        detail: parts.iter().map(|p| p.detail.as_str()).collect::<Vec<_>>().join("; "),
        outputs: parts.into_iter().flat_map(|p| p.outputs).collect(),
    }
}

fn recurrence(ctx: &Context) -> Result<Outcome> {
    let plans = ctx.config.basis_plans()?;
    // warm the bases sequentially so cache writes never race
    for p in &plans {
        ctx.basis(p)?;
    }
    let parts = ctx.map(&plans, |plan| {
        let basis = ctx.basis(plan)?;
        let key = (plan.potential.spec_string(), plan.jmax, ctx.config.precision_bits);
        let table = ctx.cache.load(&key)?.expect("table was just cached");
        let file = table.to_file();
        let mut t = Table::new(&["j"], &["a", "b"]);
        let (af, bf) = (table.a_f64(), table.b_f64());
        for j in 0..=table.jmax {
            t.push(vec![text(j), Cell::Exact(file.a[j].clone(), af[j]), Cell::Exact(file.b[j].clone(), bf[j])]);
        }
        let name = format!("recurrence_{}.csv", plan.tag);
        t.write(&ctx.out(&name))?;
        let upto = plan.jmax.min(30);
        let gram = basis.gram(upto);
        let mut orth: f64 = 0.0;
        for (i, row) in gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                orth = orth.max((v - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(Part {
            pass: orth < 1e-12,
            detail: format!("{}: Jmax {}, orthonormality {orth:.1e} up to {upto}", plan.tag, plan.jmax),
            outputs: vec![name],
        })
    })?;
    Ok(combine(parts))
}

fn kernel(ctx: &Context) -> Result<Outcome> {
    let items = ctx.plans_by_n()?;
    for (p, _) in &items {
        ctx.basis(p)?;
    }
    let parts = ctx.map(&items, |(plan, n)| {
        let n = *n;
        let b = ctx.basis(plan)?;
        let r = mrs_leading(&plan.potential, n).1;
        let blocks = build_blocks(&b, n)?;
        let bac = blocks.bac_report();
        let sec = section_identity_check(&b, n)?;
        let k = cd_kernel(&b, n, r, r)?;
        let s1 = s_beta1(&b, &blocks, r, r);
        let s4 = s_beta4(&b, &blocks, r, r);
        let sect = sec.d_eps_identity.max(sec.upper_left_identity).max(sec.lower_left_zero).max(sec.lower_right_vs_c11);
        let rows = [
            ("center", r),
            ("cd_kernel_diagonal", k),
            ("s_beta1_diagonal", s1),
            ("s_beta4_diagonal", s4),
            ("cond_beta1", blocks.cond_beta1),
            ("cond_c11", blocks.cond_c11),
            ("bac11", bac.bac11),
            ("bac12", bac.bac12),
            ("ba22_reflection", bac.ba22_reflection),
            ("d_eps_identity", sec.d_eps_identity),
            ("upper_left_identity", sec.upper_left_identity),
            ("lower_left_zero", sec.lower_left_zero),
            ("lower_right_vs_c11", sec.lower_right_vs_c11),
            ("det_c11", sec.det_c11),
        ];
        let mut t = Table::new(&["quantity"], &["value"]);
        for (q, v) in rows {
            t.push(vec![text(q), Cell::Num(v)]);
        }
        let name = format!("kernel_{}_N{n}.csv", plan.tag);
        t.write(&ctx.out(&name))?;
        Ok(Part {
            pass: bac.bac11 < 1e-8 && bac.bac12 < 1e-8 && sect < 1e-8,
            detail: format!(
                "{} N={n}: BAC {:.1e}/{:.1e}, block structure {sect:.1e}",
                plan.tag, bac.bac11, bac.bac12
            ),
            outputs: vec![name],
        })
    })?;
    Ok(combine(parts))
}

fn limits(ctx: &Context) -> Result<Outcome> {
    let ms = ctx.config.m.clone();
    let parts = ctx.map(&ms, |&m| {
        let h = HFunction::new(m);
        let mut ht = Table::new(&["k"], &["beta"]);
        for (k, b) in h.beta.iter().enumerate() {
            ht.push(vec![text(k), Cell::Exact(b.to_string(), b.to_f64())]);
        }
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let st = h_structure_check(m, &grid);
        let tgrid: Vec<f64> = (0..=90).map(|i| 0.05 + 0.01 * i as f64).collect();
        let th = theta_ode_check(m, &tgrid);
        let iq = IqTable::new(m, 4 * m as i64 + 1);
        let mut it = Table::new(&["q"], &["I", "I_tilde"]);
        for (q, (i, t)) in &iq.values {
            it.push(vec![text(q), Cell::Num(*i), Cell::Num(*t)]);
        }
        let hname = format!("h_m{m}.csv");
        let iname = format!("iq_m{m}.csv");
        ht.write(&ctx.out(&hname))?;
        it.write(&ctx.out(&iname))?;
        let theta1 = (theta_eval(m, 1.0) - PI / 2.0).abs();
        let pass = st.ode_exact
            && st.hypergeometric_exact
            && st.recursion_exact != Some(false)
            && st.monotone
            && theta1 < 1e-12
            && th.ode_residual_max < 1e-10;
        Ok(Part {
            pass,
            detail: format!(
                "m={m}: h ODE exact {}, |theta(1) - pi/2| {theta1:.1e}, theta residual {:.1e}",
                st.ode_exact, th.ode_residual_max
            ),
            outputs: vec![hname, iname],
        })
    })?;
    Ok(combine(parts))
}

fn dets(ctx: &Context) -> Result<Outcome> {
    let ms = ctx.config.m.clone();
    let rows = ctx.map(&ms, |&m| {
        let iq = IqTable::new(m, 4 * m as i64);
        let t = build_t(m, &iq)?;
        let rep = det_report(&t, &iq)?;
        let bounds = routes_for(m).into_iter().map(|r| bound(m, r)).collect::<rmt_bulk::Result<Vec<_>>>()?;
        Ok((rep, bounds))
    })?;
    let mut dt = Table::new(&["m"], &["det_tm_prime", "det_tm_minus1", "relative_gap"]);
    let mut bt = Table::new(&["m", "route", "passes"], &["bound"]);
    let mut pass = true;
    let mut detail = Vec::new();
    for (rep, bounds) in &rows {
        dt.push(vec![
            text(rep.m),
            Cell::Num(rep.det_tm_prime),
            Cell::Num(rep.det_tm_minus1),
            Cell::Num(rep.relative_gap),
        ]);
        pass &= rep.relative_gap < 1e-9;
        let mut routes = Vec::new();
        for b in bounds {
            let route = serde_json::to_value(b.route).expect("route").as_str().unwrap_or("").to_string();
            bt.push(vec![text(b.m), text(&route), text(b.passes), Cell::Num(b.bound_value)]);
            pass &= b.passes;
            routes.push(format!("{route} {:.4}", b.bound_value));
        }
        detail.push(format!(
            "m={}: det T_{} = {:.6}, relative gap {:.1e}, bounds [{}]",
            rep.m,
            rep.m - 1,
            rep.det_tm_minus1,
            rep.relative_gap,
            routes.join(", ")
        ));
    }
    dt.write(&ctx.out("dets.csv"))?;
    bt.write(&ctx.out("bounds.csv"))?;
    Ok(Outcome { pass, detail: detail.join("; "), outputs: vec!["dets.csv".into(), "bounds.csv".into()] })
}

fn riccati(ctx: &Context) -> Result<Outcome> {
    let ms = ctx.config.m.clone();
    let grid = linspace(0.01, PI / 2.0 - 0.01, 201);
    let rows = ctx.map(&ms, |&m| {
        let res = riccati_residual(m, &grid, 1e-3);
        let y = YmEvaluator::new(m);
        let p = y_m_profile(m);
        Ok((m, res.max_residual, y.eval(0.0), y.eval(PI / 2.0), p))
    })?;
    let mut t = Table::new(
        &["m", "unimodal"],
        &["max_residual", "y_at_0", "y_at_half_pi", "y_min", "theta_min", "lower_bound", "ypp0", "ypp0_law"],
    );
    let mut pass = true;
    let mut detail = Vec::new();
    for (m, res, y0, y1, p) in &rows {
        t.push(vec![
            text(m),
            text(p.unimodal),
            Cell::Num(*res),
            Cell::Num(*y0),
            Cell::Num(*y1),
            Cell::Num(p.y_min),
            Cell::Num(p.theta_min),
            Cell::Num(p.lower_bound),
            Cell::Num(p.ypp0),
            Cell::Num(p.ypp0_law),
        ]);
        let law_ok = *m < 3 || (p.ypp0 - p.ypp0_law).abs() < 1e-4;
        let ok = *res < 1e-6 && (y0 + 0.5).abs() < 1e-12 && y1.abs() < 1e-10 && p.y_min >= p.lower_bound && law_ok;
        pass &= ok;
        detail.push(format!("m={m}: residual {res:.1e}, y_min {:.4}", p.y_min));
    }
    t.write(&ctx.out("riccati.csv"))?;
    Ok(Outcome { pass, detail: detail.join("; "), outputs: vec!["riccati.csv".into()] })
}

fn flatten(led: &BoundLedger, t: &mut Table) {
    t.push(vec![
        text(&led.quantity),
        text(led.pass),
        Cell::Num(led.value),
        Cell::Num(led.radius),
        Cell::Num(led.target),
    ]);
    for s in &led.segments {
        flatten(s, t);
    }
}

fn appendix(ctx: &Context) -> Result<Outcome> {
    let l = verify_l_bound_with(&ctx.config.mesh.l_mesh())?;
    let h = verify_h_integral_with(&ctx.config.mesh.h_mesh())?;
    write_text(&ctx.out("appendix_l.json"), &l.to_json())?;
    write_text(&ctx.out("appendix_h.json"), &h.to_json())?;
    let mut t = Table::new(&["quantity", "pass"], &["value", "radius", "target"]);
    flatten(&l, &mut t);
    flatten(&h, &mut t);
    t.write(&ctx.out("appendix.csv"))?;
    Ok(Outcome {
        pass: l.pass && h.pass,
        detail: format!(
            "max L <= {:.5} (target {}), int |H| <= {:.5} (target {})",
            l.value + l.radius,
            l.target,
            h.value + h.radius,
            h.target
        ),
        outputs: vec!["appendix_l.json".into(), "appendix_h.json".into(), "appendix.csv".into()],
    })
}

fn universality(ctx: &Context) -> Result<Outcome> {
    let items = ctx.plans_by_n()?;
    for (p, _) in &items {
        ctx.basis(p)?;
    }
    let grid = uniform_grid(-1.0, 1.0, 11);
    let parts = ctx.map(&items, |(plan, n)| {
        let n = *n;
        let b = ctx.basis(plan)?;
        let r = mrs_leading(&plan.potential, n).1;
        let blocks = build_blocks(&b, n)?;
        let k = cd_kernel(&b, n, r, r)?;
        let mut et = Table::new(&["beta", "entry", "xi", "eta"], &["sup_error"]);
        let mut pass = true;
        let mut worst = Vec::new();
        for beta in [1u8, 2, 4] {
            let rep = scaled_kernel_error(&b, &blocks, beta, r, &grid)?;
            for e in &rep.entries {
                et.push(vec![text(beta), text(&e.entry), text(e.at.0), text(e.at.1), Cell::Num(e.sup_error)]);
            }
            let w = rep.entries.iter().map(|e| e.sup_error).fold(0.0, f64::max);
            worst.push(format!("beta={beta} {w:.2e}"));
            if beta != 2 {
                let s = if beta == 1 { s_beta1(&b, &blocks, r, r) } else { s_beta4(&b, &blocks, r, r) };
                pass &= (s / k - 1.0).abs() <= 3.0 / (n as f64).sqrt();
            }
        }
        let diag = scaled_kernel_error(&b, &blocks, 1, r, &[0.0])?.entry("11").unwrap_or(f64::INFINITY);
        pass &= diag < 0.05;
        let mut gt = Table::new(&["beta", "theta"], &["finite", "limit"]);
        for beta in [1u8, 2, 4] {
            let spec = GapSpec::new(0.5, 40, beta)?;
            let fin = gap_probability(&GapMode::Finite { basis: &b, n_size: n, blocks: Some(&blocks), r }, &spec)?;
            let lim = gap_probability(&GapMode::Limit, &spec)?;
            gt.push(vec![text(beta), text(0.5), Cell::Num(fin.probability), Cell::Num(lim.probability)]);
        }
        let ename = format!("universality_{}_N{n}.csv", plan.tag);
        let gname = format!("gap_{}_N{n}.csv", plan.tag);
        et.write(&ctx.out(&ename))?;
        gt.write(&ctx.out(&gname))?;
        Ok(Part {
            pass,
            detail: format!("{} N={n}: sup errors {}, diagonal {diag:.1e}", plan.tag, worst.join(" ")),
            outputs: vec![ename, gname],
        })
    })?;
    Ok(combine(parts))
}
