"""``mqcompile`` command-line entry point.

Subcommands: compile, simulate, qv-scan, verify, report. A JSON config file
(``--config``) supplies defaults that explicit flags override.

Exit codes: 0 success, 2 parse or input error, 3 decomposition failure,
4 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .cartan import DecompositionError
from .circuit_ir import (
    CircuitIR,
    CompiledCircuit,
    FormatError,
    circuit_unitary,
    generate_qv_circuit,
    load,
    save,
    toffoli_mq_circuit,
)
from .linalg import phase_distance
from .mqlayer import nuclear_norm
from .noise import NoiseModel
from .optimizer import MODES, OBJECTIVES, CompileError, CompileOptions, cartan_baseline_nuc, compile_circuit
from .sim import MAX_SIM_QUBITS, SIM_MODES, QVHarness, reports_to_csv, resolution

EXIT_OK, EXIT_PARSE, EXIT_DECOMP, EXIT_VERIFY = 0, 2, 3, 4
NOISE_FLAGS = {"depol": "depolarization", "dephase": "dephasing", "none": "none"}

log = logging.getLogger("mqcompile")


class UsageError(Exception):
    pass


def _int_list(s: str) -> list[int]:
    return [int(x) for x in str(s).split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=1)


def _add_compile_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, default="fused+optimized")
    p.add_argument("--grid", type=int, default=24, help="R_Y grid points per axis")
    p.add_argument("--sweeps", type=int, default=2)
    p.add_argument("--objective", choices=OBJECTIVES, default="l1")


def _add_sim_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", choices=tuple(NOISE_FLAGS), default="none")
    p.add_argument("--circuits", type=int, default=100)
    p.add_argument("--shots", type=int, default=None, help="shots per circuit (default from N)")
    p.add_argument("--shot-cap", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mqcompile", description="Compile and benchmark circuits with multi-qubit ZZ gates.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a circuit to MQ layers")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--in", dest="input", help="source .qvc file")
    src.add_argument("--qv", type=int, help="generate an N-qubit QV circuit")
    src.add_argument("--toffoli", action="store_true", help="emit the three-layer Toffoli")
    _add_compile_opts(p)
    _add_common(p)

    p = sub.add_parser("simulate", help="heavy-output test for one N")
    p.add_argument("--qv", type=int, required=True)
    p.add_argument("--mode", choices=SIM_MODES, default="fused")
    p.add_argument("--p-tq", type=float, default=0.0)
    _add_sim_opts(p)
    _add_common(p)

    p = sub.add_parser("qv-scan", help="threshold error rate per N by bisection")
    p.add_argument("--qv", type=_int_list, required=True, help="comma-separated N values")
    p.add_argument("--mode", action="append", choices=SIM_MODES, help="repeatable; default fused and sequentialTQ")
    _add_sim_opts(p)
    _add_common(p)

    p = sub.add_parser("verify", help="compare the unitaries of two circuit files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--config")

    p = sub.add_parser("report", help="summarize a compiled .qvc file")
    p.add_argument("path")
    p.add_argument("--source", help="source .qvc for the Cartan baseline ratio")
    p.add_argument("--config")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _opts(a) -> CompileOptions:
    return CompileOptions(a.mode, a.grid, 1e-8, a.sweeps, a.seed, a.objective)


def cmd_compile(a) -> int:
    if a.toffoli:
        cc = toffoli_mq_circuit()
        info = {"mq_layers": cc.mq_count, "couplings": cc.coupling_count(), "total_nuc": sum(nuclear_norm(x) for x in cc.mq_layers)}
    else:
        if a.input:
            c = load(a.input)
            if not isinstance(c, CircuitIR):
                raise UsageError(f"{a.input} holds a compiled circuit, expected a source circuit")
        elif a.qv:
            c = generate_qv_circuit(a.qv, a.seed)
        else:
            raise UsageError("compile needs --in, --qv or --toffoli")
        cc, rep = compile_circuit(c, _opts(a))
        info = rep.to_dict()
        info.pop("wall_time")
        info["mq_layers"] = info.pop("mq_count")
        if a.out:
            with open(a.out + ".report.json", "w") as fh:
                json.dump(info, fh, indent=1, sort_keys=True)
                fh.write("\n")
    if a.out:
        save(cc, a.out)
    print(f"mq_layers={info['mq_layers']} total_nuc={info['total_nuc']:.6f}" + (f" ratio={info['ratio']:.6f}" if "ratio" in info else "") + (f" couplings={info['couplings']}" if "couplings" in info else ""))
    return EXIT_OK


def _check_n(n: int) -> None:
    if not 2 <= n <= MAX_SIM_QUBITS:
        raise UsageError(f"simulation needs 2 <= N <= {MAX_SIM_QUBITS}, got {n}")


def cmd_simulate(a) -> int:
    _check_n(a.qv)
    noise = NoiseModel(NOISE_FLAGS[a.noise], a.p_tq)
    rep = QVHarness(a.qv, a.mode, a.circuits, a.shots, a.shot_cap, a.seed).report(noise)
    if a.format == "csv":
        _emit(reports_to_csv([rep]), a.out)
    else:
        _emit(json.dumps(rep.to_dict(), indent=1) + "\n", a.out)
    return EXIT_OK


def _scan_one(args):
    n, mode, kind, circuits, shots, cap, seed = args
    h = QVHarness(n, mode, circuits, shots, cap, seed)
    p, _ = h.threshold(kind)
    return {"N": n, "compile_mode": mode, "noise": kind, "p_threshold": p, "dp": resolution(n), "shots": h.shots}


def power_law_fit(ns, ps) -> tuple[float, float]:
    """Fit ``p = 1 / (eps N^s)``; returns ``(s, eps)``."""
    ns, ps = np.asarray(ns, float), np.asarray(ps, float)
    slope, icpt = np.polyfit(np.log(ns), np.log(ps), 1)
    return float(-slope), float(math.exp(-icpt))


def cmd_qv_scan(a) -> int:
    for n in a.qv:
        _check_n(n)
    if a.noise == "none":
        raise UsageError("qv-scan needs a noise model")
    kind = NOISE_FLAGS[a.noise]
    modes = a.mode or ["fused", "sequentialTQ"]
    tasks = [(n, m, kind, a.circuits, a.shots, a.shot_cap, a.seed) for n in a.qv for m in modes]
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as ex:
            rows = list(ex.map(_scan_one, tasks))
    else:
        rows = [_scan_one(t) for t in tasks]
    fits = {}
    for m in modes:
        pts = [(r["N"], r["p_threshold"]) for r in rows if r["compile_mode"] == m and r["p_threshold"] > 0]
        if len(pts) >= 3:
            s, eps = power_law_fit(*zip(*pts))
            fits[m] = {"s": s, "eps_eff": eps, "note": "small-N desk-scale fit"}
    if a.format == "csv":
        keys = list(rows[0])
        lines = [",".join(keys)] + [",".join(str(r[k]) for k in keys) for r in rows]
        for m, f in fits.items():
            lines.append(f"# fit {m}: s={f['s']:.4f} eps_eff={f['eps_eff']:.6g} ({f['note']})")
        _emit("\n".join(lines) + "\n", a.out)
    else:
        _emit(json.dumps({"rows": rows, "fits": fits}, indent=1) + "\n", a.out)
    return EXIT_OK


def cmd_verify(a) -> int:
    ua = circuit_unitary(load(a.a))
    ub = circuit_unitary(load(a.b))
    if ua.shape != ub.shape:
        print(f"register mismatch: {ua.shape[0]} vs {ub.shape[0]} states")
        return EXIT_VERIFY
    d = phase_distance(ua, ub)
    print(f"phase_distance={d:.3e}")
    return EXIT_OK if d <= a.tol else EXIT_VERIFY


def cmd_report(a) -> int:
    cc = load(a.path)
    if not isinstance(cc, CompiledCircuit):
        raise UsageError(f"{a.path} is not a compiled circuit")
    nucs = [nuclear_norm(x) for x in cc.mq_layers]
    info = {"n_qubits": cc.n_qubits, "mq_layers": cc.mq_count, "couplings": cc.coupling_count(), "total_nuc": float(sum(nucs)), "layer_nuc": nucs}
    if a.source:
        c = load(a.source)
        base = cartan_baseline_nuc(c)
        info["cartan_baseline_nuc"] = base
        info["ratio"] = info["total_nuc"] / base if base > 0 else float("nan")
    if a.format == "csv":
        keys = [k for k in info if k != "layer_nuc"]
        print(",".join(keys))
        print(",".join(str(info[k]) for k in keys))
    else:
        print(json.dumps(info, indent=1))
    return EXIT_OK


COMMANDS = {"compile": cmd_compile, "simulate": cmd_simulate, "qv-scan": cmd_qv_scan, "verify": cmd_verify, "report": cmd_report}


def _parse(ap: argparse.ArgumentParser, argv):
    a = ap.parse_args(argv)
    if getattr(a, "config", None):
        with open(a.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise FormatError(a.config, "config must be a JSON object")
        sp = ap._subparsers._group_actions[0].choices[a.command]
        known = {act.dest for act in sp._actions}
        bad = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if bad:
            raise FormatError(a.config, f"unknown keys {bad}")
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        a = ap.parse_args(argv)
    return a


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = _parse(ap, argv)
    except SystemExit as e:
        return int(e.code or 0)
    except (FormatError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except (FormatError, UsageError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (CompileError, DecompositionError) as e:
        print(f"decomposition failure: {e}", file=sys.stderr)
        return EXIT_DECOMP


if __name__ == "__main__":
    sys.exit(main())
