#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Fit data/calibration.json so the default workload lands on target
per-function reductions.

Token totals are linear in the per-call prompt overheads and latencies are
sums / critical paths of per-tool durations, so the engine is run once with
an all-zero profile to capture the structure (nodes, edges, backend calls,
context-dependent token base) and the fit happens here.

    python3 tools/calibrate.py --cli build/tools/trafficgraph
"""
import argparse
import json
import re
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

ROOT = Path(__file__).resolve().parents[1]

# Target percentages per workload label: (token reduction, latency improvement).
FUNCTION_TARGETS = {
    "road_name_to_id": (61.9, 12.0),
    "intersection_performance": (44.0, 23.7),
    "webster": (36.9, 21.2),
    "plot_geo_heatmap": (38.0, -36.7),
    "road_visualization": (40.0, -39.5),
    "simulation_controller": (69.1, 30.0),
    "general_qa": (22.0, 15.0),
    "locate_intersection": (45.0, 28.0),
    "optimize_worst": (55.0, 35.0),
    "fuzzy_optimize": (56.0, 36.0),
    "fuzzy_simulation": (65.0, 30.0),
    "network_report": (70.0, 70.0),
}
PAIR_TARGETS = {
    "Performance + Optimization": 37.6,
    "Heatmap + Road Visualization": 20.0,
    "Road Lookup + Simulation": 15.0,
    "Performance + Report": 25.0,
    "Locate + Optimize Worst": 17.5,
}
MEAN_CHAIN_TOKENS = 2620.0  # $786 / 30,000 queries at $0.01 per 1K tokens
MEAN_GRAPH_TOKENS = 1010.0  # $303 / 30,000 queries
PRICE_PER_1K = 0.01

STEP = re.compile(r"tokens=(\d+)\+(\d+)")


def run_cli(cli, calibration, policy, texts, out_dir):
    cmd = [cli, "--calibration", calibration, "--policy", policy, "--out-dir", out_dir, "run", *texts]
    subprocess.run(cmd, check=True, capture_output=True)
    return json.loads((Path(out_dir) / "run.json").read_text())


def structure(run):
    nodes = {}
    for node in run["graph"]["nodes"]:
        steps = STEP.findall(run["react"].get(str(node["id"]), ""))
        nodes[node["id"]] = {
            "tool": node["call"]["tool"],
            "calls": len(steps),
            "base": sum(int(a) + int(b) for a, b in steps),
        }
    edges = [tuple(e) for e in run["graph"]["edges"]]
    return {"nodes": nodes, "edges": edges, "queries": len(run["queries"])}


def critical_path(s, dur):
    order = sorted(s["nodes"])  # ids are a topological order for these graphs
    preds = {n: [a for a, b in s["edges"] if b == n] for n in order}
    finish = {}
    for _ in order:
        for n in order:
            if n in finish or any(p not in finish for p in preds[n]):
                continue
            finish[n] = max((finish[p] for p in preds[n]), default=0.0) + dur[s["nodes"][n]["tool"]]
    return max(finish.values())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", default=str(ROOT / "build/tools/trafficgraph"))
    parser.add_argument("--output", default=str(ROOT / "data/calibration.json"))
    args = parser.parse_args()

    workload = json.loads((ROOT / "data/workload.json").read_text())["queries"]
    pairs = json.loads((ROOT / "data/pairs.json").read_text())["pairs"]
    text = {q["label"]: q["text"] for q in workload}
    tools = sorted({t["tool"] for r in json.loads((ROOT / "data/rules.json").read_text())["rules"]
                    for t in r["tasks"]} | {"general_answer"})

    with tempfile.TemporaryDirectory() as tmp:
        zero = Path(tmp) / "zero.json"
        zero.write_text(json.dumps({
            "tools": {t: {"tokens_graph": 0, "tokens_chain": 0, "duration_graph_ms": 0, "duration_chain_ms": 0}
                      for t in tools},
            "decomposition_overhead": {"tokens": 0, "ms": 0},
            "graph_construction_overhead": {"tokens": 0, "ms": 0},
        }))
        single = {}
        for label in FUNCTION_TARGETS:
            single[label] = {p: structure(run_cli(args.cli, str(zero), p, [text[label]], tmp))
                             for p in ("graph", "chain")}
        merged = {}
        for pair in pairs:
            merged[pair["name"]] = structure(run_cli(args.cli, str(zero), "graph",
                                                     [text[q] for q in pair["queries"]], tmp))

    n = len(tools)
    # x = [tok_g(n), tok_c(n), dur_g(n), dur_c(n), decomp_tok, graph_tok, decomp_ms, graph_ms]

    def unpack(x):
        return (dict(zip(tools, x[0:n])), dict(zip(tools, x[n:2 * n])), dict(zip(tools, x[2 * n:3 * n])),
                dict(zip(tools, x[3 * n:4 * n])), *x[4 * n:4 * n + 4])

    def tokens(s, per_call, decomp_tok, graph_tok=0.0):
        total = sum(v["base"] + v["calls"] * per_call[v["tool"]] for v in s["nodes"].values())
        return total + s["queries"] * (decomp_tok + graph_tok)

    def latency_graph(s, dur_g, d_ms, g_ms):
        return s["queries"] * (d_ms + g_ms) + critical_path(s, dur_g)

    def latency_chain(s, dur_c, d_ms):
        return s["queries"] * d_ms + sum(dur_c[v["tool"]] for v in s["nodes"].values())

    def evaluate(x):
        tg, tc, dg, dc, dtok, gtok, dms, gms = unpack(x)
        out = {"functions": {}, "pairs": {}}
        for label, s in single.items():
            out["functions"][label] = (
                tokens(s["graph"], tg, dtok, gtok), tokens(s["chain"], tc, dtok),
                latency_graph(s["graph"], dg, dms, gms), latency_chain(s["chain"], dc, dms))
        for pair in pairs:
            seq = sum(out["functions"][q][3] for q in pair["queries"])
            out["pairs"][pair["name"]] = (latency_graph(merged[pair["name"]], dg, dms, gms), seq)
        return out

    def residuals(x):
        m = evaluate(x)
        res = []
        for label, (rt, rl) in FUNCTION_TARGETS.items():
            g, c, lg, lc = m["functions"][label]
            res.append((100 * (c - g) / c - rt) / 2.0)
            res.append((100 * (lc - lg) / lc - rl) / 3.0)
        for name, target in PAIR_TARGETS.items():
            merged_ms, seq = m["pairs"][name]
            weight = 1.0 if name == "Performance + Optimization" else 2.0
            res.append((100 * (seq - merged_ms) / seq - target) / weight)
        pair_mean = np.mean([100 * (s - mm) / s for mm, s in m["pairs"].values()])
        res.append((pair_mean - np.mean(list(PAIR_TARGETS.values()))) * 2.0)
        k = len(FUNCTION_TARGETS)
        lat_mean = np.mean([100 * (lc - lg) / lc for _, _, lg, lc in m["functions"].values()])
        res.append((lat_mean - np.mean([t[1] for t in FUNCTION_TARGETS.values()])) * 2.0)
        res.append((sum(v[1] for v in m["functions"].values()) / k - MEAN_CHAIN_TOKENS) / 2.0)
        res.append((sum(v[0] for v in m["functions"].values()) / k - MEAN_GRAPH_TOKENS) / 2.0)
        # Weak prior: keep durations in a plausible second-scale range.
        res.extend(1e-3 * (x[2 * n:4 * n] - 2000.0))
        return np.array(res)

    x0 = np.concatenate([np.full(n, 200.0), np.full(n, 500.0), np.full(n, 1500.0), np.full(n, 2500.0),
                         [150.0, 100.0, 800.0, 1000.0]])
    # Floors keep every tool call plausible: some prompt, some latency.
    lower = np.concatenate([np.full(2 * n, 40.0), np.full(2 * n, 250.0), [20.0, 20.0, 100.0, 100.0]])
    fit = least_squares(residuals, np.maximum(x0, lower + 1), bounds=(lower, np.inf), max_nfev=20000)
    x = fit.x.copy()
    # Freeze: integer tokens, whole milliseconds.
    x = np.round(x)
    tg, tc, dg, dc, dtok, gtok, dms, gms = unpack(x)
    profile = {
        "note": ("Fitted by tools/calibrate.py. Headline percentages reproduced with this profile are "
                 "consistency checks of the engine against calibrated inputs, not measurements of a "
                 "language model."),
        "tools": {t: {"tokens_graph": int(tg[t]), "tokens_chain": int(tc[t]),
                      "duration_graph_ms": float(dg[t]), "duration_chain_ms": float(dc[t])} for t in tools},
        "decomposition_overhead": {"tokens": int(dtok), "ms": float(dms)},
        "graph_construction_overhead": {"tokens": int(gtok), "ms": float(gms)},
        "pricing": {"per_1k_tokens": PRICE_PER_1K},
        "token_counting": "chars4",
        "context_cap": 512,
    }
    Path(args.output).write_text(json.dumps(profile, indent=2) + "\n")

    m = evaluate(x)
    k = len(FUNCTION_TARGETS)
    tr = [100 * (c - g) / c for g, c, _, _ in m["functions"].values()]
    lr = [100 * (lc - lg) / lc for _, _, lg, lc in m["functions"].values()]
    pr = {name: 100 * (s - mm) / s for name, (mm, s) in m["pairs"].items()}
    for label, (g, c, lg, lc) in m["functions"].items():
        print(f"{label:26s} tokens {g:7.0f} {c:7.0f} {100 * (c - g) / c:6.1f}%  "
              f"latency {lg:7.0f} {lc:7.0f} {100 * (lc - lg) / lc:6.1f}%")
    for name, v in pr.items():
        print(f"{name:30s} {v:6.1f}%")
    chain_mean = sum(v[1] for v in m["functions"].values()) / k
    graph_mean = sum(v[0] for v in m["functions"].values()) / k
    print(f"mean token reduction {np.mean(tr):.2f}%  mean latency improvement {np.mean(lr):.2f}%  "
          f"mean pair improvement {np.mean(list(pr.values())):.2f}%")
    print(f"mean tokens chain {chain_mean:.1f} graph {graph_mean:.1f}  "
          f"cost chain ${chain_mean * PRICE_PER_1K / 1000 * 30000:.2f} graph ${graph_mean * PRICE_PER_1K / 1000 * 30000:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
