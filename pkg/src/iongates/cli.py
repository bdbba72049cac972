"""Command-line front end: modes | design | sweep | verify.

Exit codes: 0 ok, 1 configuration or input error, 2 infeasible, 3 tolerance
not met (best effort written), 4 dimension guard.
"""

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from contextlib import contextmanager

import numpy as np

from . import __version__, serialize
from .drive import AmplitudeVector, ToneBasis, write_spectrum, write_waveform
from .errors import DimensionGuard, EmptyNullSpace, Infeasible, IonGatesError
from .config import load_config
from .fidelity import evaluate, unitary_fidelity_alt_decay
from .oracle_sim import (
    FockConfig,
    check_unitary_structure,
    closed_form_apply,
    evolve,
    product_state,
    thermal_ghz_fidelity,
)
from .phase_forms import carrier_second_order, phase_forms, trajectories, write_trajectory
from .pipeline import design_gate, ms_baseline
from .targets import builtin_target, write_coupling_csv
from .trap_modes import modes_table, normal_modes

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_TOLERANCE, EXIT_GUARD = 0, 1, 2, 3, 4
CONFIG_ERRORS = (IonGatesError, ValueError, KeyError, TypeError)


@contextmanager
def _atomic(path):
    """Yield a temporary path that replaces ``path`` on success."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _write_json(path, obj):
    with _atomic(path) as tmp:
        serialize.dump(obj, tmp)


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg.solver.seed = int(args.seed)
    if getattr(args, "robust", None):
        cfg.gate.robust = [s for s in args.robust.split(",") if s]
    if getattr(args, "timing_order", None) is not None:
        cfg.gate.timing_order = int(args.timing_order)
    if getattr(args, "oracle", False):
        cfg.verify.oracle = True
    return cfg.validate()


def _target_matrix(cfg):
    t = cfg.gate.target
    return builtin_target(t.kind, cfg.n_ions, **t.params)


def _is_ghz_target(tgt):
    return bool(np.allclose(np.abs(tgt.gaps), np.pi / 2, atol=1e-9) and np.isclose(tgt.F_ideal, 1.0))


def _write_modes(path, modes):
    table = modes_table(modes)
    head = ["mode", "nu_over_nu1", "eta"] + [f"O_{n}" for n in range(modes.n_ions)]
    with _atomic(path) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for row in table:
            w.writerow([int(row[0])] + [f"{v:.17g}" for v in row[1:]])


def cmd_modes(cfg, out):
    modes = normal_modes(cfg.n_ions, cfg.trap.model())
    _write_modes(os.path.join(out, "modes.csv"), modes)
    return EXIT_OK


def _solution_record(cfg, design):
    sol, tones = design.solution, design.tones
    return {
        "n_ions": cfg.n_ions,
        "T": tones.T,
        "T_in_com_periods": cfg.gate.T_in_com_periods,
        "tone_index": [] if tones.index is None else [int(k) for k in tones.index],
        "omega": tones.omega,
        "phi": tones.phi,
        "r": sol.r,
        "x": sol.x,
        "phase_sign": sol.phase_sign,
        "seed": cfg.solver.seed,
        "margin": design.margin,
        "one_norm": sol.one_norm,
        "config": cfg.to_dict(),
    }


def _phases_record(design):
    sol, tgt = design.solution, design.target
    return {
        "phases": sol.phases,
        "phase_sign": sol.phase_sign,
        "target_gaps": tgt.gaps,
        "ref_mode": tgt.ref_mode,
        "phi_ideal": tgt.phi_ideal,
        "F_ideal": tgt.F_ideal,
        "residuals": sol.residuals,
        "one_norm": sol.one_norm,
        "restart_index": sol.restart_index,
        "iterations": sol.iterations,
    }


def _tolerance_met(cfg, design):
    res = design.solution.residuals
    ok = res["quad_max"] < cfg.solver.tol_quad and res["cc_sq"] < cfg.solver.tol_cc
    rep = design.report
    if _is_ghz_target(design.target) and np.isfinite(rep.infidelity):
        ok = ok and rep.infidelity < cfg.verify.max_infidelity
    return ok


def run_design(cfg, out, T_periods=None, write=True):
    """Design one gate; returns (exit code, design or None)."""
    modes = normal_modes(cfg.n_ions, cfg.trap.model())
    T = 2 * np.pi * (cfg.gate.T_in_com_periods if T_periods is None else T_periods)
    J = _target_matrix(cfg)
    try:
        design = design_gate(modes, T, J, tuple(cfg.gate.robust), cfg.gate.timing_order,
                             cfg.gate.margin, cfg.solver.options(), cfg.gate.carrier,
                             cfg.verify.nbar, cfg.gate.auto_widen,
                             exact=cfg.verify.fidelity_mode == "exact")
    except (Infeasible, EmptyNullSpace) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE, None
    if write:
        os.makedirs(out, exist_ok=True)
        amps = AmplitudeVector(design.solution.r, 1.0)
        with _atomic(os.path.join(out, "spectrum.csv")) as tmp:
            write_spectrum(tmp, design.tones, amps)
        with _atomic(os.path.join(out, "waveform.csv")) as tmp:
            write_waveform(tmp, design.tones, amps)
        traj = trajectories(modes, design.tones, design.solution.r, np.linspace(0, T, 401))
        with _atomic(os.path.join(out, "trajectory.csv")) as tmp:
            write_trajectory(tmp, traj, T)
        with _atomic(os.path.join(out, "coupling.csv")) as tmp:
            write_coupling_csv(tmp, design.target.j_ideal)
        _write_json(os.path.join(out, "phases.json"), _phases_record(design))
        _write_json(os.path.join(out, "fidelity.json"), design.report.to_dict())
        _write_json(os.path.join(out, "solution.json"), _solution_record(cfg, design))
    return (EXIT_OK if _tolerance_met(cfg, design) else EXIT_TOLERANCE), design


def _manifest(cfg, out, outputs, t0, extra=None):
    m = {
        "config_sha256": cfg.digest(),
        "tool_version": __version__,
        "seed": cfg.solver.seed,
        "wall_time_s": time.time() - t0,
        "outputs": sorted(outputs),
        "solution": "solution.json" if "solution.json" in outputs else None,
    }
    m.update(extra or {})
    _write_json(os.path.join(out, "manifest.json"), m)


def cmd_design(cfg, out):
    t0 = time.time()
    os.makedirs(out, exist_ok=True)
    code, design = run_design(cfg, out)
    outputs = [] if design is None else ["spectrum.csv", "waveform.csv", "trajectory.csv",
                                         "coupling.csv", "phases.json", "fidelity.json",
                                         "solution.json"]
    _manifest(cfg, out, outputs, t0, {"exit_code": code})
    if design is not None:
        print(f"infidelity {design.report.infidelity:.3e}  one_norm {design.solution.one_norm:.6g}")
    return code


def _row_seed(seed, i):
    return int(np.random.SeedSequence([int(seed), i]).generate_state(1, dtype=np.uint64)[0])


def cmd_sweep(cfg, out, T_list=None):
    t0 = time.time()
    T_list = list(cfg.gate.T_list if T_list is None else T_list)
    if not T_list:
        print("empty T_list", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(out, exist_ok=True)
    modes = normal_modes(cfg.n_ions, cfg.trap.model())
    rows, any_ok = [], False
    base_seed = cfg.solver.seed
    for i, P in enumerate(T_list):
        cfg.solver.seed = _row_seed(base_seed, i)
        code, design = run_design(cfg, out, T_periods=P, write=False)
        status = {EXIT_OK: "ok", EXIT_TOLERANCE: "tolerance", EXIT_INFEASIBLE: "infeasible"}[code]
        any_ok |= code == EXIT_OK
        ms = np.nan
        if modes.n_ions % 2 == 0:
            ms = ms_baseline(modes, 2 * np.pi * P, cfg.verify.nbar)[0].infidelity
        if design is None:
            rows.append([P, status, np.nan, 0, np.nan, np.nan, ms])
        else:
            rows.append([P, status, design.margin, design.tones.M, design.solution.one_norm,
                         design.report.infidelity, ms])
    cfg.solver.seed = base_seed
    with _atomic(os.path.join(out, "sweep.csv")) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T_in_com_periods", "status", "margin", "n_tones", "one_norm",
                    "infidelity", "ms_infidelity"])
        for P, st, mg, M, one, inf, ms in rows:
            w.writerow([f"{P:.17g}", st, f"{mg:.17g}", M, f"{one:.17g}", f"{inf:.17g}", f"{ms:.17g}"])
    _manifest(cfg, out, ["sweep.csv"], t0)
    return EXIT_OK if any_ok else EXIT_INFEASIBLE


def load_solution(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
        tones = ToneBasis(float(data["T"]), np.array(data["omega"], dtype=float),
                          np.array(data["phi"], dtype=float),
                          np.array(data["tone_index"], dtype=int) if data.get("tone_index") else None)
        r = np.array(data["r"], dtype=float)
        if r.shape != tones.omega.shape:
            raise ValueError("amplitude vector does not match the tones")
        return data, tones, r
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"cannot read solution {path}: {exc}") from exc


def cmd_verify(cfg, out, solution_path):
    t0 = time.time()
    if cfg.verify.oracle and cfg.n_ions > 3:
        raise DimensionGuard(f"oracle limited to N <= 3, got {cfg.n_ions}")
    data, tones, r = load_solution(solution_path)
    if int(data.get("n_ions", cfg.n_ions)) != cfg.n_ions:
        raise ValueError("solution and config disagree on n_ions")
    modes = normal_modes(cfg.n_ions, cfg.trap.model())
    forms = phase_forms(modes, tones)
    diag = carrier_second_order(modes, tones, r)
    branch = int(data.get("phase_sign", 1))
    report = evaluate(modes, tones, r, diag, nbar=cfg.verify.nbar, branch=branch, forms=forms,
                      exact=cfg.verify.fidelity_mode == "exact")
    result = {"closed_form": report.to_dict()}
    if np.isfinite(report.F_U) and np.isfinite(report.F_U_approx):
        result["approx_minus_exact"] = report.F_U_approx - report.F_U
    if cfg.verify.oracle:
        fc = FockConfig(n_max=cfg.verify.n_max, nbar=cfg.verify.nbar)
        orc = {"n_max": fc.n_max}
        if cfg.n_ions % 2 == 0:
            vals = {}
            for b in (1, -1):
                vals[str(b)] = thermal_ghz_fidelity(modes, tones, r, fc, b)
            orc["ghz_fidelity"] = vals
            orc["closed_minus_oracle"] = report.F_U - vals[str(branch)]
            if cfg.n_ions == 2:
                ins = report.inputs
                orc["alt_decay_minus_oracle"] = unitary_fidelity_alt_decay(
                    ins["A"], ins["F"], ins["G"], modes, ins["nbar"], branch) - vals[str(branch)]
        else:
            st = evolve(modes, tones, r, fc)
            tr = trajectories(modes, tones, r, np.array([0.0, tones.T]))
            psi_cf = closed_form_apply(modes, tr.A[:, -1], tr.alpha[:, -1].real,
                                       tr.alpha[:, -1].imag, fc.n_max,
                                       product_state(cfg.n_ions, fc.n_max))
            orc["state_overlap"] = float(abs(np.vdot(psi_cf, st.psi)) ** 2)
        if cfg.n_ions <= 2:
            orc["structure"] = check_unitary_structure(modes, tones, r,
                                                       FockConfig(n_max=min(fc.n_max, 20)))
        result["oracle"] = orc
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "verify.json"), result)
    _manifest(cfg, out, ["verify.json"], t0)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="iongates", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("modes", "design", "sweep", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--seed", type=int, help="master RNG seed (overrides config)")
        s.add_argument("--robust", help="comma list of timing,freq,optical")
        s.add_argument("--timing-order", type=int, dest="timing_order")
        s.add_argument("--oracle", action="store_true", help="run the Fock-space oracle")
        if name == "verify":
            s.add_argument("--solution", required=True, help="solution.json from design")
        if name == "sweep":
            s.add_argument("--T-list", dest="T_list", help="comma list of gate times in COM periods")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "modes":
            return cmd_modes(cfg, args.out)
        if args.command == "design":
            return cmd_design(cfg, args.out)
        if args.command == "sweep":
            T_list = None
            if args.T_list is not None:
                T_list = [float(v) for v in args.T_list.split(",") if v.strip()]
            return cmd_sweep(cfg, args.out, T_list)
        return cmd_verify(cfg, args.out, args.solution)
    except DimensionGuard as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (Infeasible, EmptyNullSpace) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CONFIG_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
