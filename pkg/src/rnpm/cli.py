"""Command-line front end: JSON config in, CSV/JSON data out.

Subcommands
-----------
perf        closed-form (p, epsilon) table with brute-force oracle columns
repeater    optimized time-vs-distance sweep with the direct baseline
distill     recurrence-method distillation curves
montecarlo  waiting-time / measurement-outcome sampling with predictions
optics      full outcome ensemble of one protocol attempt, as JSON

Exit codes: 0 success, 2 configuration error, 3 every sweep point infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import distill, optics, optimize
from .chain import (GeometryKind, Hardware, chain_closed_form, ChainConfig,
                    expected_max_geometric, simulate_waiting_time,
                    waiting_time_stats)
from .formulas import (DetectorKind, DetectorModel, InteractionParams,
                       LinkGeometry, link_transmittance, performance,
                       performance_oracle)

DEFAULT_HARDWARE = {
    "tau": 0.98, "eta": 0.95, "detector": "single_photon",
    "L_att_km": 22.0, "c_m_per_s": 2.0e8, "f_hz": 1.0e10,
}

DEFAULT_DISTILL_BETA_SQ = [0.04, 0.08, 0.12]


class ConfigError(ValueError):
    pass


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _check_keys(block: dict, allowed: set[str], where: str):
    unknown = set(block) - allowed
    _require(not unknown, f"unknown keys in {where}: {sorted(unknown)}")


def _parse_detector(name: str) -> DetectorKind:
    try:
        return DetectorKind(name)
    except ValueError:
        raise ConfigError(
            f"unknown detector {name!r}; expected one of "
            f"{[k.value for k in DetectorKind]}") from None


def parse_hardware(config: dict) -> Hardware:
    block = dict(DEFAULT_HARDWARE)
    user = config.get("hardware", {})
    _require(isinstance(user, dict), "hardware must be an object")
    _check_keys(user, set(DEFAULT_HARDWARE), "hardware")
    block.update(user)
    det = DetectorModel(_parse_detector(block["detector"]), float(block["eta"]))
    return Hardware(float(block["tau"]), det, float(block["L_att_km"]),
                    float(block["c_m_per_s"]), float(block["f_hz"]))


def parse_geometry(config: dict) -> GeometryKind:
    block = config.get("geometry", {"kind": "midpoint"})
    _require(isinstance(block, dict), "geometry must be an object")
    _check_keys(block, {"kind"}, "geometry")
    try:
        return GeometryKind(block.get("kind", "midpoint"))
    except ValueError:
        raise ConfigError(f"unknown geometry kind {block.get('kind')!r}") from None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _emit(rows: list[dict], columns: list[str], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
        return
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row.get(k)) for k in columns})


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_perf(config: dict, args) -> tuple[int, list[dict], list[str]]:
    hw = parse_hardware(config)
    block = config.get("perf", {})
    _check_keys(block, {"beta_sq", "L_A_km", "L_B_km", "detectors"}, "perf")
    beta_sq = block.get("beta_sq", [0.04])
    _require(isinstance(beta_sq, list) and beta_sq, "perf.beta_sq must be a nonempty list")
    geom = LinkGeometry(float(block.get("L_A_km", 0.0)),
                        float(block.get("L_B_km", 0.0)), hw.L_att_km, hw.tau)
    T_A, T_B = link_transmittance(geom)
    kinds = [_parse_detector(d) for d in block.get("detectors", [])] or \
        [hw.detector.kind]
    rows = []
    for kind in kinds:
        det = DetectorModel(kind, hw.detector.efficiency)
        for b2 in beta_sq:
            par = InteractionParams(math.sqrt(float(b2)))
            pf = performance(det, par, T_A, T_B)
            po = performance_oracle(det, par, T_A, T_B)
            rows.append({
                "detector": kind.value, "beta_sq": float(b2),
                "T_A": T_A, "T_B": T_B,
                "eta": det.efficiency,
                "p": pf.p, "epsilon": pf.epsilon,
                "p_oracle": po.p, "epsilon_oracle": po.epsilon,
            })
    cols = ["detector", "beta_sq", "T_A", "T_B", "eta", "p", "epsilon",
            "p_oracle", "epsilon_oracle"]
    return 0, rows, cols


def cmd_repeater(config: dict, args) -> tuple[int, list[dict], list[str]]:
    hw = parse_hardware(config)
    geometry = parse_geometry(config)
    block = config.get("repeater", {})
    _check_keys(block, {"L_km", "F_targets", "detectors"}, "repeater")
    L_grid = block.get("L_km", [])
    _require(isinstance(L_grid, list) and L_grid, "repeater.L_km must be a nonempty list")
    F_targets = block.get("F_targets", [0.9, 0.7])
    detectors = tuple(_parse_detector(d) for d in block.get("detectors", [])) \
        or (hw.detector.kind,)
    spec = optimize.SweepSpec(tuple(float(L) for L in L_grid),
                              tuple(float(F) for F in F_targets),
                              hw, geometry, detectors)
    recs = optimize.sweep(spec)
    rows = []
    for r in recs:
        rows.append({
            "L_km": r.L_km, "F_target": r.F_target,
            "detector": r.detector.value, "geometry": r.geometry.value,
            "n_opt": r.n if r.feasible else "",
            "beta_g_sq": r.beta_g_sq if r.feasible else "",
            "beta_s_sq": r.beta_s_sq if r.feasible else "",
            "T_seconds": r.T_seconds if r.feasible else "",
            "F": r.F_achieved if r.feasible else "",
            "direct_seconds": r.direct_seconds,
            "errors": "" if r.feasible else (r.message or "infeasible"),
        })
    cols = ["L_km", "F_target", "detector", "geometry", "n_opt", "beta_g_sq",
            "beta_s_sq", "T_seconds", "F", "direct_seconds", "errors"]
    code = 3 if recs and not any(r.feasible for r in recs) else 0
    return code, rows, cols


def cmd_distill(config: dict, args) -> tuple[int, list[dict], list[str]]:
    hw = parse_hardware(config)
    block = config.get("distill", {})
    _check_keys(block, {"F_grid", "beta_sq"}, "distill")
    F_grid = block.get("F_grid", [round(0.5 + 0.025 * i, 4) for i in range(21)])
    beta_sq = block.get("beta_sq", DEFAULT_DISTILL_BETA_SQ)
    rows = []
    for b2 in beta_sq:
        for F in F_grid:
            res = distill.recurrence_step(float(F), math.sqrt(float(b2)),
                                          hw.tau, hw.detector)
            rows.append({
                "F": float(F), "beta_sq": float(b2),
                "P_s": res.P_s, "F_prime": res.F_prime,
            })
    return 0, rows, ["F", "beta_sq", "P_s", "F_prime"]


def _montecarlo_waiting(block: dict, hw: Hardware, geometry: GeometryKind,
                        seed: int, trials: int) -> list[dict]:
    n = int(block.get("n", 1))
    L_km = float(block.get("L_km", 20.0 * 2 ** n))
    if "p_g" in block:
        p_g = float(block["p_g"])
        p_s = float(block.get("p_s", 1.0))
        cfg = None
    else:
        bg = math.sqrt(float(block.get("beta_g_sq", 0.04)))
        bs = math.sqrt(float(block.get("beta_s_sq", 0.04)))
        cfg = ChainConfig(L_km, n, bg, bs, hw, geometry)
        from .chain import generation_perf, swap_perf
        p_g = generation_perf(bg, hw, cfg.l0_km, geometry)[0]
        p_s = swap_perf(bs, hw)[0] if n else 1.0
    samples = simulate_waiting_time(n, p_g, p_s, seed, trials)
    mean, se = waiting_time_stats(samples)
    unit = (L_km / 2 ** n) * 1e3 / hw.c_m_per_s
    predicted = 1.5 ** n / (p_g * p_s ** n) if n else 1.0 / p_g
    rows = [{
        "quantity": "waiting_time_units", "n": n,
        "p_g": p_g, "p_s": p_s,
        "trials": trials, "seed": seed,
        "empirical_mean": mean, "std_error": se,
        "predicted": predicted,
    }, {
        "quantity": "waiting_time_seconds", "n": n,
        "p_g": p_g, "p_s": p_s,
        "trials": trials, "seed": seed,
        "empirical_mean": mean * unit, "std_error": se * unit,
        "predicted": predicted * unit,
    }]
    if n == 1 and p_s == 1.0:
        rows.append({
            "quantity": "max_of_two_geometrics", "n": n,
            "p_g": p_g, "p_s": p_s,
            "trials": trials, "seed": seed,
            "empirical_mean": mean, "std_error": se,
            "predicted": expected_max_geometric(p_g),
        })
    return rows


def _montecarlo_rnpm(block: dict, hw: Hardware, seed: int,
                     trials: int) -> list[dict]:
    b2 = float(block.get("beta_sq", 0.04))
    geom = LinkGeometry(float(block.get("L_A_km", 0.0)),
                        float(block.get("L_B_km", 0.0)), hw.L_att_km, hw.tau)
    cfg = optics.ProtocolConfig(InteractionParams(math.sqrt(b2)), geom,
                                hw.detector)
    ens = optics.run_protocol(cfg)
    keys = sorted(ens.entries)
    probs = np.array([ens.entries[k].probability for k in keys])
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    eps_of = {}
    for key in keys:
        par = optics.outcome_parity(*key)
        if par is not None:
            eps_of[key], _ = optics.phase_error_split(ens.entries[key].state, par)
    # fixed-block sampling for worker-count-independent determinism
    block_sz = 4096
    succ = 0
    errs = 0
    done = 0
    b_idx = 0
    while done < trials:
        cnt = min(block_sz, trials - done)
        rng = np.random.default_rng([seed, b_idx])
        draws = rng.choice(len(keys), size=cnt, p=probs)
        u = rng.random(cnt)
        for d, uu in zip(draws, u):
            key = keys[d]
            if key in eps_of:
                succ += 1
                if uu < eps_of[key]:
                    errs += 1
        done += cnt
        b_idx += 1
    T_A, T_B = link_transmittance(geom)
    pf = performance(hw.detector, InteractionParams(math.sqrt(b2)), T_A, T_B)
    p_hat = succ / trials
    p_se = math.sqrt(max(p_hat * (1 - p_hat), 1e-300) / trials)
    e_hat = errs / succ if succ else 0.0
    e_se = math.sqrt(max(e_hat * (1 - e_hat), 1e-300) / max(succ, 1))
    return [{
        "quantity": "rnpm_success_probability", "n": "", "p_g": "", "p_s": "",
        "trials": trials, "seed": seed, "empirical_mean": p_hat,
        "std_error": p_se, "predicted": pf.p,
    }, {
        "quantity": "rnpm_phase_error", "n": "", "p_g": "", "p_s": "",
        "trials": trials, "seed": seed, "empirical_mean": e_hat,
        "std_error": e_se, "predicted": pf.epsilon,
    }]


def cmd_montecarlo(config: dict, args) -> tuple[int, list[dict], list[str]]:
    hw = parse_hardware(config)
    geometry = parse_geometry(config)
    block = config.get("montecarlo", {})
    _check_keys(block, {"mode", "n", "L_km", "p_g", "p_s", "beta_g_sq",
                        "beta_s_sq", "beta_sq", "L_A_km", "L_B_km",
                        "trials", "seed"}, "montecarlo")
    trials = int(args.trials if args.trials is not None
                 else block.get("trials", 0))
    _require(trials > 0, "montecarlo requires trials > 0")
    seed = int(args.seed if args.seed is not None else block.get("seed", 0))
    mode = block.get("mode", "waiting")
    _require(mode in ("waiting", "rnpm"), f"unknown montecarlo mode {mode!r}")
    if mode == "waiting":
        rows = _montecarlo_waiting(block, hw, geometry, seed, trials)
    else:
        rows = _montecarlo_rnpm(block, hw, seed, trials)
    cols = ["quantity", "n", "p_g", "p_s", "trials", "seed",
            "empirical_mean", "std_error", "predicted"]
    return 0, rows, cols


def cmd_optics(config: dict, args, out) -> int:
    hw = parse_hardware(config)
    block = config.get("optics", {})
    _check_keys(block, {"beta_sq", "alpha", "theta", "L_A_km", "L_B_km",
                        "variant", "initial_state"}, "optics")
    geom = LinkGeometry(float(block.get("L_A_km", 0.0)),
                        float(block.get("L_B_km", 0.0)), hw.L_att_km, hw.tau)
    if "alpha" in block or "theta" in block:
        _require("alpha" in block and "theta" in block,
                 "optics.alpha and optics.theta must be given together")
        alpha, theta = float(block["alpha"]), float(block["theta"])
        par = InteractionParams(alpha * math.sin(theta / 2.0), alpha, theta)
    else:
        par = InteractionParams(math.sqrt(float(block.get("beta_sq", 0.04))))
    variant = optics.Variant(block.get("variant", "central"))
    initial = block.get("initial_state")
    if initial is not None:
        initial = np.asarray(initial, dtype=complex)
    cfg = optics.ProtocolConfig(par, geom, hw.detector, variant, initial)
    ens = optics.run_protocol(cfg)
    doc = {"outcomes": []}
    for (m, n) in sorted(ens.entries):
        e = ens.entries[(m, n)]
        rec = {"m": m, "n": n, "probability": e.probability,
               "parity": optics.outcome_parity(m, n)}
        if e.state is not None:
            rec["state_re"] = e.state.real.tolist()
            rec["state_im"] = e.state.imag.tolist()
        doc["outcomes"].append(rec)
    json.dump(doc, out, indent=2)
    out.write("\n")
    return 0


# ---------------------------------------------------------------------------

TOP_LEVEL_KEYS = {"hardware", "geometry", "perf", "repeater", "distill",
                  "montecarlo", "optics"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rnpm",
        description="Remote-parity-measurement link, repeater and "
                    "distillation calculations")
    ap.add_argument("command", choices=["perf", "repeater", "distill",
                                        "montecarlo", "optics"])
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", default=None, help="output path (default stdout)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    return ap


def run(argv: list[str], stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        _require(isinstance(config, dict), "config must be a JSON object")
        _check_keys(config, TOP_LEVEL_KEYS, "config")
        buf = io.StringIO()
        if args.command == "optics":
            code = cmd_optics(config, args, buf)
        else:
            handler = {"perf": cmd_perf, "repeater": cmd_repeater,
                       "distill": cmd_distill,
                       "montecarlo": cmd_montecarlo}[args.command]
            code, rows, cols = handler(config, args)
            _emit(rows, cols, args.format, buf)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        stdout.write(buf.getvalue())
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
