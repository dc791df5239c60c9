"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 simulation
failure, 4 infeasible design or unreachable reference.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import output
from .analysis import gain_ccm, steady_state_point
from .comparator import sweep, topology_catalog
from .config import parse_config
from .controller import StepScenario, run_closed_loop
from .designer import DesignSpec, load_mismatch, size_components
from .errors import ConfigError, DesignError, HgvmError, SimulationError
from .simulator import (
    balance_report, mode_sequences, periodic_orbit, periodic_steady_state, simulate, waveform_metrics,
)

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_DESIGN = 0, 2, 3, 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SimulationError):
        return EXIT_SIM
    if isinstance(exc, DesignError):
        return EXIT_DESIGN
    return EXIT_CONFIG


def _write(path: str | None, text: str):
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _report(command, inputs, results, warnings, code=0, category=None, message=None):
    return {"command": command, "inputs": inputs, "results": results,
            "warnings": list(warnings),
            "status": {"exit_code": code, "category": category, "message": message}}


def _read_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    cfg = parse_config(text)
    if cfg.params is None:
        raise ConfigError("config does not define a complete converter (use a preset or give "
                          "vin, l1..l3, c1..c6, r_load, fs, duty)")
    return cfg


def _gain_plot(points, title):
    d = np.linspace(0.02, 0.85, 300)
    series = {"M(D)": (d, gain_ccm(d))}
    for label, (x, y) in points.items():
        series[label] = ([x, x], [0, y])
    return output.svg_plot(series, title=title, xlabel="duty ratio", ylabel="gain")


# -- commands -----------------------------------------------------------------

def cmd_steady(args):
    op = steady_state_point(args.vin, args.duty, args.io)
    inputs = {"vin": args.vin, "duty": args.duty, "io": args.io}
    if args.json:
        _write(args.json, output.dumps(_report("steady", inputs, op.to_dict(), [])))
    else:
        d = op.to_dict()
        for k in ("gain", "v_o", "v_q", "v_c1", "v_c2", "v_c3", "v_c4", "v_c5", "v_c6",
                  "v_d1", "v_d2", "v_d3", "v_d4", "v_d5", "v_d6", "i_l1", "i_l2", "i_l3",
                  "i_d1", "i_d2", "i_d3", "i_d4", "i_d5", "i_d6", "i_q_on", "i_o"):
            print(f"{k:8s} {d[k]:.6g}")
        print(f"diode stresses are magnitudes; {op.diode_polarity}")
    if args.plot:
        _write(args.plot, _gain_plot({"operating point": (args.duty, op.gain)}, "CCM gain"))
    return EXIT_OK


def cmd_design(args):
    spec = DesignSpec(args.vin, args.vo, args.po, args.fs, ripple_fraction_v=args.ripple,
                      inductor_margin=args.margin)
    res = size_components(spec)
    warnings = []
    if args.r_load is not None:
        msg = load_mismatch(res, args.r_load)
        if msg:
            warnings.append(msg)
    if args.json:
        _write(args.json, output.dumps(_report("design", output.to_jsonable(spec), res.to_dict(),
                                               warnings)))
    else:
        print(f"duty     {res.duty:.6g}")
        print(f"gain     {res.gain:.6g}")
        print(f"i_o      {res.i_o:.6g} A")
        for k, v in zip(("l1", "l2", "l3"), res.l_min):
            print(f"{k}_min   {v * 1e6:.4f} uH")
        for k, (c, dv) in enumerate(zip(res.c_min, (res.dv_c1, res.dv_c2, res.dv_c3, res.dv_c4,
                                                     res.dv_c5, res.dv_c6)), start=1):
            print(f"c{k}_min   {c * 1e6:.4f} uF  (dv {dv:.4g} V)")
        for w in warnings:
            print(f"warning: {w}")
    if args.plot:
        _write(args.plot, _gain_plot({"design point": (res.duty, res.gain)}, "CCM gain"))
    return EXIT_OK


def cmd_compare(args):
    table = sweep(args.dmin, args.dmax, args.step)
    header = ["D"]
    for group in ("gain", "switch", "diode"):
        header += [f"{group}_{k}" for k in table.keys]
    rows = [[float(d)] + list(table.gain[:, i]) + list(table.switch_stress[:, i])
            + list(table.diode_stress[:, i]) for i, d in enumerate(table.duty)]
    csv_text = output.table_csv(header, rows)
    if args.out:
        _write(args.out, csv_text)
    else:
        sys.stdout.write(csv_text)
    off = {k: [float(d) for d, f in zip(table.duty, table.off_scale[i]) if f]
           for i, k in enumerate(table.keys) if table.off_scale[i].any()}
    if args.json:
        res = {"columns": header, "off_scale_diode_stress": off,
               "topologies": [{"key": t.key, "name": t.name, "switches": t.switches,
                               "diodes": t.diodes, "capacitors": t.capacitors,
                               "inductors": t.inductors} for t in topology_catalog()]}
        _write(args.json, output.dumps(_report(
            "compare", {"dmin": args.dmin, "dmax": args.dmax, "step": args.step}, res, [])))
    for k, ds in off.items():
        print(f"note: {k} diode stress off-scale (> 3 Vo) at {len(ds)} grid points", file=sys.stderr)
    if args.plot:
        series = {k: (table.duty, table.gain[i]) for i, k in enumerate(table.keys)}
        _write(args.plot, output.svg_plot(series, title="Voltage gain", xlabel="duty ratio",
                                          ylabel="gain"))
    return EXIT_OK


def cmd_simulate(args):
    cfg = _read_config(args.config)
    params, sim = cfg.params, cfg.sim
    if args.periods is not None:
        from dataclasses import replace
        sim = replace(sim, periods=args.periods)
    warnings = []
    start = periodic_orbit(params, sim) if args.shoot else None
    trace, events = simulate(params, sim, start)
    window = min(20, trace.n_periods)
    results = {"periods": trace.n_periods, "samples": int(len(trace.t)),
               "events": len(events), "metrics": waveform_metrics(trace, window)}
    if trace.n_periods >= 2:
        st = periodic_steady_state(trace)
        results["steady_state"] = {"converged": st.converged, "period": st.period,
                                   "last_delta": float(st.deltas[-1].max())}
        if not st.converged:
            warnings.append("periodic steady state not reached; balances are transient")
        results["balance"] = balance_report(trace, window).to_dict()
    seqs = mode_sequences(trace)
    results["last_period_sequence"] = [{"to_mode": m, "cause": c} for m, c in seqs[-1]]
    vo_an = gain_ccm(params.duty) * params.vin
    if cfg.r_load_alt is not None:
        warnings.append(f"alternative load {cfg.r_load_alt:g} ohm would draw "
                        f"{vo_an ** 2 / cfg.r_load_alt:.4g} W at {vo_an:.4g} V")
    inputs = {"params": params.to_dict(), "sim": output.to_jsonable(sim),
              "dt": trace.dt, "preset": cfg.values.get("preset"), "shoot": args.shoot}
    if args.out:
        _write(args.out, output.trace_csv(trace))
    if args.json:
        _write(args.json, output.dumps(_report("simulate", inputs, results, warnings)))
    if not args.json or args.json != "-":
        m = results["metrics"]["mean"]
        print(f"mean v_o over last {window} periods: {m['v_o']:.6g} V "
              f"(ideal {vo_an:.6g} V)")
        for w in warnings:
            print(f"warning: {w}")
    if args.plot:
        series = {"vo": (trace.t, trace.v_o)}
        for k in range(6):
            series[f"vC{k + 1}"] = (trace.t, trace.x[:, 3 + k])
        _write(args.plot, output.svg_plot(series, title="Simulated voltages", xlabel="t [s]",
                                          ylabel="V"))
    return EXIT_OK


def parse_refs(text: str):
    try:
        pairs = []
        for item in text.split(","):
            t, v = item.split(":")
            pairs.append((float(t), float(v)))
    except ValueError as exc:
        raise ConfigError(f"--refs expects 't0:V0,t1:V1,...', got {text!r}") from exc
    return pairs


def cmd_control(args):
    cfg = _read_config(args.config)
    pairs = parse_refs(args.refs)
    seg = args.segment
    duration = args.duration if args.duration is not None else pairs[-1][0] + seg
    scenario = StepScenario(tuple(pairs), duration)
    from dataclasses import replace
    sim = cfg.sim if args.stride is None else replace(cfg.sim, record_stride=args.stride)
    res = run_closed_loop(cfg.params, cfg.pi, scenario, sim)
    results = {"segments": [{"t_start": a, "t_end": b, "reference": r, **m.to_dict()}
                            for (a, b, r), m in zip(scenario.segments(), res.metrics)],
               "final_duty": float(res.period_duty[-1]),
               "duty_range": [float(res.period_duty.min()), float(res.period_duty.max())]}
    warnings = [f"segment at {r:g} V did not settle" for (a, b, r), m
                in zip(scenario.segments(), res.metrics) if not m.settled]
    inputs = {"params": cfg.params.to_dict(), "pi": output.to_jsonable(cfg.pi),
              "sim": output.to_jsonable(sim), "schedule": [list(p) for p in scenario.schedule],
              "duration": duration}
    if args.out:
        _write(args.out, output.trace_csv(res.trace))
    if args.json:
        _write(args.json, output.dumps(_report("control", inputs, results, warnings)))
    if not args.json or args.json != "-":
        for s in results["segments"]:
            st = "n/a" if s["settling_time"] is None else f"{s['settling_time'] * 1e3:.3g} ms"
            print(f"ref {s['reference']:g} V: settling {st}, overshoot {s['overshoot'] * 100:.3g}%, "
                  f"error {s['steady_state_error'] * 100:.3g}%, ripple {s['ripple']:.3g} V")
    if args.plot:
        t = res.trace.period_t0
        _write(args.plot, output.svg_plot(
            {"vo (period mean)": (t, res.period_vo), "reference": (t, res.period_ref)},
            title="Closed-loop tracking", xlabel="t [s]", ylabel="V"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hgvm-qbc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--plot", metavar="SVG", help="write a polyline SVG of the main signals")
        p.add_argument("--json", nargs="?", const="-", metavar="PATH",
                       help="write the JSON report (stdout when no path is given)")

    p = sub.add_parser("simulate", help="run the switched simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", metavar="CSV")
    p.add_argument("--periods", type=int)
    p.add_argument("--shoot", action="store_true",
                   help="start on the periodic orbit found by shooting")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("steady", help="closed-form operating point")
    p.add_argument("--vin", type=float, required=True)
    p.add_argument("--duty", type=float, required=True)
    p.add_argument("--io", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("design", help="duty ratio and minimum L/C values")
    p.add_argument("--vin", type=float, required=True)
    p.add_argument("--vo", type=float, required=True)
    p.add_argument("--po", type=float, required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--ripple", type=float, default=0.10)
    p.add_argument("--margin", type=float, default=1.0, help="inductor margin factor")
    p.add_argument("--r-load", type=float, help="check a load against the design power")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("compare", help="topology comparison table")
    p.add_argument("--dmin", type=float, required=True)
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--out", metavar="CSV")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("control", help="closed-loop PI reference tracking")
    p.add_argument("--config", required=True)
    p.add_argument("--refs", required=True, help='schedule "t0:V0,t1:V1,..." in s and V')
    p.add_argument("--segment", type=float, default=0.05,
                   help="length of the last segment when --duration is not given")
    p.add_argument("--duration", type=float)
    p.add_argument("--stride", type=int, help="record every n-th step")
    p.add_argument("--out", metavar="CSV")
    common(p)
    p.set_defaults(func=cmd_control)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except HgvmError as exc:
        code = exit_code_for(exc)
        print(f"hgvm-qbc: error [{exc.category}]: {exc}", file=sys.stderr)
        if getattr(args, "json", None) and args.json != "-":
            _write(args.json, output.dumps(_report(args.command, {}, {}, [], code,
                                                   exc.category, str(exc))))
        return code


if __name__ == "__main__":
    sys.exit(main())
