"""Suite runner.

Subcommands: moduli (curve sweeps and modulus inequalities), sets (projection
and rolling-ball certificates over the set zoo), hypo (pairing-functional
sweeps, hypomonotonicity records, touching-point construction), all.

Outputs one CSV per curve and a run_report.json per invocation.  Under a fixed
seed and budget, repeated runs are byte-identical; no timestamps are written.
Exit codes: 0 all records pass, 1 any record fails, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import hypo as H
from . import moduli as M
from . import psifuncs as P
from . import sets as S
from . import zoo as Z


class ConfigError(ValueError):
    pass


_SMOOTH_UC = ("euclid", "l15", "l3", "ellipse")  # uniformly convex and smooth

_BUDGET_SAMPLES = {
    "low": {"cert": 20, "roll": 24, "pairs": 512, "gamma": 1024, "section": 200, "touch": 20},
    "default": {"cert": 40, "roll": 48, "pairs": 2048, "gamma": 4096, "section": 1000, "touch": 100},
    "high": {"cert": 80, "roll": 96, "pairs": 8192, "gamma": 8192, "section": 2000, "touch": 200},
}


def _default_eps_grid():
    return [round(0.05 * k, 10) for k in range(1, 39)]  # 0.05 .. 1.90


def _default_tau_grid():
    pts = sorted({min(1.0, round(0.01 * 2.0 ** (k / 3.0), 12)) for k in range(20)} | {1.0})
    return pts


def _default_r_grid():
    return [round(v, 10) for v in np.linspace(0.05, 1.0, 20)]


@dataclasses.dataclass
class SuiteConfig:
    norms: list
    sets: list  # (set id, R) pairs
    eps_grid: list
    tau_grid: list
    r_grid: list
    seed: int = 0
    budget: str = "default"
    out_dir: str = "out"


def default_config() -> SuiteConfig:
    return SuiteConfig(
        norms=["euclid", "l15", "l3", "l1", "linf", "poly", "ellipse"],
        sets=[list(t) for t in Z.DEFAULT_SET_SCALES],
        eps_grid=_default_eps_grid(),
        tau_grid=_default_tau_grid(),
        r_grid=_default_r_grid(),
    )


def load_config(path, seed=None, budget=None, out_dir=None) -> SuiteConfig:
    cfg = default_config()
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}")
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        for key in raw:
            if key not in {"norms", "sets", "grids", "seed", "budget", "out_dir"}:
                raise ConfigError(f"unknown config key {key!r}")
        if "norms" in raw:
            cfg.norms = list(raw["norms"])
        if "sets" in raw:
            cfg.sets = [list(t) for t in raw["sets"]]
        grids = raw.get("grids", {})
        if "eps" in grids:
            cfg.eps_grid = [float(v) for v in grids["eps"]]
        if "tau" in grids:
            cfg.tau_grid = [float(v) for v in grids["tau"]]
        if "r" in grids:
            cfg.r_grid = [float(v) for v in grids["r"]]
        if "seed" in raw:
            cfg.seed = int(raw["seed"])
        if "budget" in raw:
            cfg.budget = str(raw["budget"])
        if "out_dir" in raw:
            cfg.out_dir = str(raw["out_dir"])
    if seed is not None:
        cfg.seed = seed
    if budget is not None:
        cfg.budget = budget
    if out_dir is not None:
        cfg.out_dir = out_dir
    _validate(cfg)
    return cfg


def _validate(cfg: SuiteConfig):
    norms = Z.norm_zoo()
    registry = Z.set_registry(norms)
    for nid in cfg.norms:
        if nid not in norms:
            raise ConfigError(f"unknown norm id {nid!r}")
    for entry in cfg.sets:
        if len(entry) != 2:
            raise ConfigError(f"set entries must be [id, R], got {entry!r}")
        sid, R = entry
        if sid not in registry:
            raise ConfigError(f"unknown set id {sid!r}")
        if not (float(R) > 0):
            raise ConfigError(f"set scale must be positive, got {R!r}")
    if cfg.budget not in _BUDGET_SAMPLES:
        raise ConfigError(f"budget must be one of low/default/high, got {cfg.budget!r}")
    for v in cfg.eps_grid:
        if not (0.0 < v <= 2.0):
            raise ConfigError(f"eps grid value {v} outside (0, 2]")
    for label, grid in (("tau", cfg.tau_grid), ("r", cfg.r_grid)):
        for v in grid:
            if not (0.0 < v <= 1.0):
                raise ConfigError(f"{label} grid value {v} outside (0, 1]")
    if not cfg.eps_grid or not cfg.tau_grid or not cfg.r_grid:
        raise ConfigError("grids must be nonempty")


# ---------------------------------------------------------------------------
# report plumbing


def _rec(check, anchor, verdict, margin, artifacts=()):
    return {
        "check": check,
        "anchor": anchor,
        "verdict": verdict,
        "margin": None if margin is None else float(margin),
        "artifacts": list(artifacts),
    }


def _fmt(v) -> str:
    return "%.12g" % float(v)


def _write_rows(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_curve(out: Path, stem: str, curve: M.ModulusCurve) -> str:
    fname = f"{stem}.csv"
    rows = [(a, v, curve.direction) for a, v in zip(curve.args, curve.values)]
    _write_rows(out / fname, ("arg", "value", "direction"), rows)
    return fname


# ---------------------------------------------------------------------------
# moduli command


def cmd_moduli(cfg: SuiteConfig, out: Path) -> list:
    budget = M.SearchBudget.preset(cfg.budget)
    records = []
    tol = 5e-3
    r = np.asarray(cfg.r_grid, dtype=float)
    eps_full = np.unique(np.concatenate([np.asarray(cfg.eps_grid), 2.0 * r]))
    tau_full = np.unique(np.concatenate([np.asarray(cfg.tau_grid), r / 2.0, 2.0 * r]))
    for nid in cfg.norms:
        n = Z.norm_zoo()[nid]
        delta = M.delta_estimate(n, eps_full, budget)
        rho = M.rho_estimate(n, tau_full, budget)
        lam_lo = M.supporting_modulus_estimate(n, r, "lower", budget)
        lam_hi = M.supporting_modulus_estimate(n, r, "upper", budget)
        arts = [
            _write_curve(out, f"{nid}_delta", delta),
            _write_curve(out, f"{nid}_rho", rho),
            _write_curve(out, f"{nid}_support_lower", lam_lo),
            _write_curve(out, f"{nid}_support_upper", lam_hi),
        ]
        records.append(_rec(f"moduli/{nid}/curves", "modulus-curve-sweep", "pass", None, arts))

        lo_v = np.asarray(lam_lo.values)
        hi_v = np.asarray(lam_hi.values)
        d2r = np.array([delta.eval(t) for t in 2.0 * r])
        rho_half = np.array([rho.eval(t) for t in r / 2.0])
        rho_twice = np.array([rho.eval(t) for t in 2.0 * r])
        chord_gap = 1.0 - np.sqrt(np.maximum(0.0, 1.0 - r * r))

        m_lower = float(np.min(np.minimum(d2r + tol - lo_v, chord_gap + tol - d2r)))
        records.append(_rec(f"moduli/{nid}/support-shift-sandwich-lower",
                            "support-shift-vs-convexity", "pass" if m_lower >= 0 else "fail", m_lower))
        m_upper = float(np.min(np.minimum(hi_v - rho_half + tol, rho_twice + tol - hi_v)))
        records.append(_rec(f"moduli/{nid}/support-shift-sandwich-upper",
                            "support-shift-vs-smoothness", "pass" if m_upper >= 0 else "fail", m_upper))
        m_order = float(np.min(np.minimum.reduce([lo_v + tol, hi_v - lo_v + tol, r - hi_v + tol])))
        records.append(_rec(f"moduli/{nid}/support-shift-order",
                            "support-shift-order", "pass" if m_order >= 0 else "fail", m_order))

        d_vals = np.asarray(delta.values)
        r_vals = np.asarray(rho.values)
        m_dn = float(min(np.min(M.hilbert_delta(np.asarray(delta.args)) + tol - d_vals),
                         np.min(r_vals - M.hilbert_rho(np.asarray(rho.args)) + tol)))
        records.append(_rec(f"moduli/{nid}/roundest-space-extremality",
                            "roundest-space-extremality", "pass" if m_dn >= 0 else "fail", m_dn))

        if nid in _SMOOTH_UC:
            lo_b, hi_b = M.doubling_ratio(rho)
            m_db = float(min(4.15 - hi_b, lo_b - 1.85))
            records.append(_rec(f"moduli/{nid}/doubling-window", "smoothness-doubling-window",
                                "pass" if m_db >= 0 else "fail", m_db))
        else:
            records.append(_rec(f"moduli/{nid}/doubling-window", "smoothness-doubling-window",
                                "skip", None))
    return records


# ---------------------------------------------------------------------------
# sets command


def cmd_sets(cfg: SuiteConfig, out: Path) -> list:
    norms = Z.norm_zoo()
    registry = Z.set_registry(norms)
    counts = _BUDGET_SAMPLES[cfg.budget]
    records = []
    for sid, R in cfg.sets:
        R = float(R)
        spec, ambient_id = registry[sid]
        n = Z.ambient_norm(norms, ambient_id)
        tag = f"{sid}@{R:g}"
        cert = S.prox_smooth_certificate(spec, n, R, sample_count=counts["cert"], seed=cfg.seed)
        omp = S.rolling_ball_check_projection(spec, n, R, sample_count=counts["roll"], seed=cfg.seed)
        omn = S.rolling_ball_check_normal(spec, n, R, sample_count=counts["roll"], seed=cfg.seed)
        fname = f"sets_{sid}_{R:g}.json"
        (out / fname).write_text(json.dumps({
            "certificate": json.loads(cert.to_json()),
            "rolling_projection": json.loads(omp.to_json()),
            "rolling_normal": json.loads(omn.to_json()),
        }, sort_keys=True, indent=2) + "\n")
        records.append(_rec(f"sets/{tag}/certificate", "shell-projection-certificate",
                            cert.verdict, cert.worst_margin, [fname]))
        records.append(_rec(f"sets/{tag}/rolling-projection", "exterior-ball-along-projection",
                            omp.verdict, omp.worst_margin, [fname]))
        records.append(_rec(f"sets/{tag}/rolling-normal", "exterior-ball-along-normal",
                            omn.verdict, omn.worst_margin, [fname]))
        coherent = cert.verdict == omp.verdict == omn.verdict
        records.append(_rec(f"sets/{tag}/coherence", "certificate-coherence",
                            "pass" if coherent else "fail", None))
    return records


# ---------------------------------------------------------------------------
# hypo command


def _ambient_curves(nid: str, norms: dict, budget, r_grid, cache: dict):
    """Convexity and smoothness curves for an ambient norm id (estimated in
    2D, closed-form for the Euclidean ambients)."""
    if nid in cache:
        return cache[nid]
    args = np.unique(np.concatenate([np.asarray(r_grid), np.linspace(0.0125, 0.1, 8),
                                     np.linspace(1.1, 2.0, 6)]))
    if nid in ("euclid", "euclid3"):
        delta = M.ModulusCurve(args=tuple(args), values=tuple(M.hilbert_delta(args)),
                               direction="over", label=f"{nid}-delta")
        rho = M.ModulusCurve(args=tuple(args), values=tuple(M.hilbert_rho(args)),
                             direction="under", label=f"{nid}-rho")
    else:
        n = norms[nid]
        delta = M.delta_estimate(n, args, budget)
        rho = M.rho_estimate(n, args, budget)
    cache[nid] = (delta, rho)
    return cache[nid]


def cmd_hypo(cfg: SuiteConfig, out: Path) -> list:
    norms = Z.norm_zoo()
    registry = Z.set_registry(norms)
    counts = _BUDGET_SAMPLES[cfg.budget]
    budget = M.SearchBudget.preset(cfg.budget)
    records = []
    curve_cache: dict = {}
    eps_arr = np.array([0.05, 0.1, 0.2, 0.4])

    # pairing-functional sandwich per uniformly convex and smooth norm
    for nid in [x for x in cfg.norms if x in _SMOOTH_UC]:
        n = norms[nid]
        A = S.make_ball_complement([0.0] * n.dim, 1.0, gauge=n if nid != "euclid" else None)
        rho_args = np.unique(np.concatenate([eps_arr / 4.0, np.asarray(cfg.r_grid)]))
        rho = M.rho_estimate(n, rho_args, budget) if nid != "euclid" else \
            M.ModulusCurve(args=tuple(rho_args), values=tuple(M.hilbert_rho(rho_args)),
                           direction="under", label="euclid-rho")
        lam_hi = M.supporting_modulus_estimate(n, np.unique(2.0 * eps_arr), "upper", budget)
        rows = []
        worst = np.inf
        for eps in eps_arr:
            g = H.gamma_estimate(A, n, float(eps), budget=counts["gamma"], seed=cfg.seed)
            lo = float(rho.eval(eps / 4.0))
            hi = 2.0 * float(lam_hi.eval(2.0 * eps))
            rows.append((eps, g, lo, hi))
            worst = min(worst, g - (lo - 5e-3), (hi + 5e-3) - g)
        fname = f"gamma_{nid}.csv"
        _write_rows(out / fname, ("eps", "gamma", "lower_bound", "upper_bound"), rows)
        records.append(_rec(f"hypo/{nid}/gamma-sandwich", "pairing-defect-sandwich",
                            "pass" if worst >= 0 else "fail", float(worst), [fname]))
        if nid == "euclid":
            m = float(min(1e-3 - abs(g - e * e) for e, g, _, _ in rows))
            records.append(_rec("hypo/euclid/gamma-quadratic", "euclidean-pairing-defect",
                                "pass" if m >= 0 else "fail", m, [fname]))

    # one-seventeenth smoothness certificate per test norm
    for nid in cfg.norms:
        n = norms[nid]
        A = S.make_ball_complement([0.0] * n.dim, 1.0, gauge=n if nid != "euclid" else None)
        _, rho = _ambient_curves(nid, norms, budget, cfg.r_grid, curve_cache)
        psi = P.psi_from_curve(rho, scale=1.0 / 17.0, name="seventeenth-smoothness")
        rep = H.hypo_check(A, n, psi, 1.0, eps_max=0.4, pair_budget=counts["pairs"], seed=cfg.seed)
        records.append(_rec(f"hypo/{nid}/seventeenth-smoothness", "seventeenth-smoothness-certificate",
                            rep.verdict, rep.worst_margin))

    # desk-scale forward implications over the configured sets
    omega_results = {}
    for sid, R in cfg.sets:
        R = float(R)
        spec, ambient_id = registry[sid]
        tag = f"{sid}@{R:g}"
        n = Z.ambient_norm(norms, ambient_id)
        base_ambient = "euclid" if ambient_id == "euclid3" else ambient_id
        if base_ambient not in cfg.norms and base_ambient not in ("euclid",):
            records.append(_rec(f"hypo/{tag}/forward-smoothness", "rolling-ball-implies-hypomonotone",
                                "skip", None))
            records.append(_rec(f"hypo/{tag}/forward-convexity", "hypomonotone-implies-rolling-ball",
                                "skip", None))
            continue
        omn = S.rolling_ball_check_normal(spec, n, R, sample_count=counts["roll"], seed=cfg.seed)
        omega_results[tag] = omn
        delta_c, rho_c = _ambient_curves(ambient_id if ambient_id != "euclid3" else "euclid3",
                                         norms, budget, cfg.r_grid, curve_cache)
        psi4 = P.psi_from_curve(rho_c, scale=4.0, name="four-smoothness")
        psi2d = P.psi_from_curve(delta_c, scale=2.0, name="two-convexity")
        if omn.verdict == "pass":
            try:
                rep = H.hypo_check(spec, n, psi4, R, eps_max=2.0 * R,
                                   pair_budget=counts["pairs"], seed=cfg.seed)
                ok = rep.verdict == "pass"
                records.append(_rec(f"hypo/{tag}/forward-smoothness",
                                    "rolling-ball-implies-hypomonotone",
                                    "pass" if ok else "fail", rep.worst_margin))
            except H.NoFeasiblePairs:
                records.append(_rec(f"hypo/{tag}/forward-smoothness",
                                    "rolling-ball-implies-hypomonotone", "pass", None))
        else:
            records.append(_rec(f"hypo/{tag}/forward-smoothness",
                                "rolling-ball-implies-hypomonotone", "skip", None))
        try:
            rep2 = H.hypo_check(spec, n, psi2d, R, eps_max=2.0 * R,
                                pair_budget=counts["pairs"], seed=cfg.seed)
            hyp_pass = rep2.verdict == "pass"
        except H.NoFeasiblePairs:
            hyp_pass = True
        if hyp_pass:
            ok = omn.verdict == "pass"
            records.append(_rec(f"hypo/{tag}/forward-convexity",
                                "hypomonotone-implies-rolling-ball",
                                "pass" if ok else "fail", omn.worst_margin))
        else:
            records.append(_rec(f"hypo/{tag}/forward-convexity",
                                "hypomonotone-implies-rolling-ball", "skip", None))

    # renorming transfer: box complement, max-norm certificate moved to euclid
    box = Z.linf_box_complement(norms)
    tgrid = np.linspace(0.0, 1.2, 13)
    psi_lin = P.PsiSpec(knots=tgrid, values=2.0 * tgrid, lipschitz=2.0, name="two-linear")
    rep_inf = H.hypo_check(box, norms["linf"], psi_lin, 1.0, eps_max=0.5,
                           pair_budget=counts["pairs"], seed=cfg.seed)
    psi_moved = P.rescale_psi(psi_lin, arg_scale=np.sqrt(2.0), value_scale=2.0, name="moved")
    rep_e = H.hypo_check(box, norms["euclid"], psi_moved, 1.0 / np.sqrt(2.0), eps_max=0.35,
                         pair_budget=counts["pairs"], seed=cfg.seed)
    ok = rep_inf.verdict == "pass" and rep_e.verdict == "pass"
    records.append(_rec("hypo/renorm-transfer", "equivalent-norm-transfer",
                        "pass" if ok else "fail",
                        min(rep_inf.worst_margin, rep_e.worst_margin)))

    # section bound for members that clear the rolling-ball normal check
    for sid, R in cfg.sets:
        R = float(R)
        tag = f"{sid}@{R:g}"
        omn = omega_results.get(tag)
        if omn is None or omn.verdict != "pass":
            continue
        spec, ambient_id = registry[sid]
        n = Z.ambient_norm(norms, ambient_id)
        _, rho_c = _ambient_curves(ambient_id if ambient_id != "euclid3" else "euclid3",
                                   norms, budget, cfg.r_grid, curve_cache)
        a0 = np.asarray(S.boundary_sample(spec, n, 1, seed=cfg.seed + 29)[0])
        rep = H.section_bound_check(spec, n, R, rho_c, a0, delta=R / 2.0,
                                    sample_count=counts["section"], seed=cfg.seed)
        records.append(_rec(f"hypo/{tag}/section-bound", "boundary-section-bound",
                            rep.verdict, rep.worst_margin))

    # constructive touching points across the zoo
    if not cfg.sets:
        records.append(_rec("hypo/touching-construction", "near-touch-construction",
                            "skip", None))
        return records
    rng = np.random.default_rng(cfg.seed + 41)
    failures = 0
    attempts = 0
    k = 0
    while attempts < counts["touch"] and k < 50 * counts["touch"]:
        sid, R = cfg.sets[k % len(cfg.sets)]
        k += 1
        spec, ambient_id = registry[sid]
        n = Z.ambient_norm(norms, ambient_id)
        try:
            z0 = S.shell_sample(spec, n, float(R), 1, seed=cfg.seed + k)[0]
        except S.EmptyShell:
            continue
        z1 = Z.sample_inside(spec, rng)
        eps = float(rng.uniform(0.05, 0.5))
        attempts += 1
        try:
            lam, y, p = H.touching_point_search(spec, n, z0, z1, eps, seed=cfg.seed)
            gap = S.norm_eval(n, np.asarray(z1) - np.asarray(z0))
            zlam = np.asarray(z0) + lam * (np.asarray(z1) - np.asarray(z0))
            if not (S.norm_eval(n, zlam - y) < eps * gap and float(p @ (np.asarray(z1) - np.asarray(z0))) < eps * gap):
                failures += 1
        except (H.ConstructionFailed, ValueError):
            failures += 1
    records.append(_rec("hypo/touching-construction", "near-touch-construction",
                        "pass" if failures == 0 else "fail", -float(failures)))
    return records


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="banachlab",
                                     description="normed-space geometry suite runner")
    parser.add_argument("command", choices=["moduli", "sets", "hypo", "all"])
    parser.add_argument("--config", default=None, help="path to a JSON suite config")
    parser.add_argument("--out", default=None, help="output directory (default: out)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--budget", choices=["low", "default", "high"], default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, seed=args.seed, budget=args.budget, out_dir=args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"config error: cannot create output directory: {e}", file=sys.stderr)
        return 2

    records = []
    if args.command in ("moduli", "all"):
        records += cmd_moduli(cfg, out)
    if args.command in ("sets", "all"):
        records += cmd_sets(cfg, out)
    if args.command in ("hypo", "all"):
        records += cmd_hypo(cfg, out)

    report = {
        "command": args.command,
        "seed": cfg.seed,
        "budget": cfg.budget,
        "records": records,
    }
    (out / "run_report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")

    n_fail = sum(1 for r in records if r["verdict"] == "fail")
    for r in records:
        print(f"[{r['verdict'].upper():>4}] {r['check']}")
    print(f"{len(records)} records, {n_fail} failing; report: {out / 'run_report.json'}")
    return 1 if n_fail else 0


if __name__ == "__main__":
    sys.exit(main())
