"""Batch front-end: load a model, verify its doctrine laws, run the
completion pipeline with per-stage traces, and export reports, censuses,
DOT fragments and figures.

Exit codes partition cleanly: 0 all checks pass, 1 some check failed,
2 the input (model document, flags, missing trace) is unusable, 3 the
requested fragment cannot be enumerated under the budget.  Structured
output is deterministic byte for byte: no timestamps, no randomness,
canonical enumeration order everywhere.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

from .category import NotEnumerable, Unsupported, check_category_laws
from .completions import STAGE_ORDER, tripos_to_topos
from .doctrine import (
    Formula,
    check_cauchy_complete,
    check_extensional,
    check_logical_morphism,
    doctrine_battery,
    safe_hom,
)
from .lattice import BudgetExceeded, LatticeError
from .models import load_model, seed_objects
from .report import all_ok
from .topos import check_topos, topos_census

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_BUDGET = 3

# hom cells larger than this are recorded as skipped in censuses
CENSUS_HOM_CAP = 20_000

TRACE_NAME = "trace.json"


@dataclass
class RunConfig:
    """One CLI invocation, fully determined by flags."""

    model: str
    stages: tuple
    max_size: int
    budget: int
    out: str
    format: str = "human"

    def validate(self):
        if self.max_size < 1:
            raise ValueError("--max-size must be at least 1")
        if self.budget < 1:
            raise ValueError("--budget must be at least 1")
        if self.format not in ("human", "structured"):
            raise ValueError("--format must be human or structured")
        pure = tuple(s for s in self.stages if s != "topos")
        if pure != STAGE_ORDER[: len(pure)]:
            raise ValueError(
                "--stages must list a prefix of %s, optionally followed by"
                " topos" % ",".join(STAGE_ORDER)
            )
        if "topos" in self.stages and pure != STAGE_ORDER:
            raise ValueError("stage topos needs all of %s first" % ",".join(STAGE_ORDER))

    @property
    def pure_stages(self):
        return tuple(s for s in self.stages if s != "topos")


def parse_stages(text):
    out = tuple(s.strip() for s in text.split(",") if s.strip())
    for s in out:
        if s not in STAGE_ORDER + ("topos",):
            raise ValueError("unknown stage %r" % s)
    return out


def load_fragment(cfg):
    """The model plus the probe objects the run quantifies over."""
    bundle = load_model(cfg.model, budget=cfg.budget)
    if bundle.pinned:
        seeds = [a for a in bundle.seeds if len(a.payload) <= cfg.max_size]
        if not seeds:
            raise ValueError("all pinned seeds exceed --max-size %d" % cfg.max_size)
    else:
        seeds = seed_objects(bundle.base, cfg.max_size)
    return bundle, seeds


def preflight_budget(cat, seeds, budget):
    """Refuse up front when the requested fragment cannot be enumerated."""
    for a in seeds:
        for b in seeds:
            need = len(a.payload) * len(b.payload)
            if need > budget:
                raise NotEnumerable(
                    "product(%s,%s)" % (a.short(), b.short()), need, budget
                )
            hom = len(b.payload) ** len(a.payload)
            if hom > budget:
                raise NotEnumerable(
                    "hom(%s,%s)" % (a.short(), b.short()), hom, budget
                )


# ---------------------------------------------------------------------------
# report rendering


def emit_reports(cfg, payload, reports):
    if cfg.format == "structured":
        doc = dict(payload)
        doc["reports"] = [r.to_dict() for r in reports]
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for k in sorted(payload):
            print("%s: %s" % (k, payload[k]))
        for r in reports:
            print(r.summary())
        verdict = "all checks passed" if all_ok(reports) else "CHECKS FAILED"
        print(verdict)


# ---------------------------------------------------------------------------
# verify


def cmd_verify(cfg):
    """Doctrine battery on the input model over the requested fragment."""
    bundle, seeds = load_fragment(cfg)
    preflight_budget(bundle.base, seeds, cfg.budget)
    reports = [check_category_laws(bundle.base, seeds, budget=cfg.budget)]
    reports += doctrine_battery(bundle.doctrine, seeds, budget=cfg.budget)
    emit_reports(
        cfg,
        {"command": "verify", "model": bundle.name, "objects": len(seeds)},
        reports,
    )
    return EXIT_OK if all_ok(reports) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# pipeline


def object_census(d, objs):
    rows = []
    for a in objs:
        rows.append({"object": a.short(), "fiber_bound": d.fiber(a).size_bound})
    return rows


def hom_census(cat, objs, budget):
    cap = min(budget, CENSUS_HOM_CAP)
    rows = []
    for a in objs:
        for b in objs:
            homs = safe_hom(cat, a, b, cap)
            rows.append(
                {
                    "source": a.short(),
                    "target": b.short(),
                    "count": None if homs is None else len(homs),
                }
            )
    return rows


def readiness_probes(d, objs):
    """Seeds plus total-relation quotient carriers, where quotients exist;
    coarse carriers are where a pre-collapse stage fails extensionality."""
    probes = list(objs)
    for a in objs:
        try:
            cone = d.base.product(a, a)
            rho = Formula(cone.obj, d.fiber(cone.obj).top)
            q = d.quotient(rho)
        except (Unsupported, NotEnumerable, NotImplementedError, AttributeError):
            continue
        if q.cod not in probes:
            probes.append(q.cod)
    return probes


def cmd_pipeline(cfg):
    """Run the staged completion, verify every stage, write the trace."""
    bundle, seeds = load_fragment(cfg)
    pipe = tripos_to_topos(bundle.doctrine, seeds, stages=cfg.pure_stages)

    trace = {
        "model": bundle.name,
        "config": {
            "stages": list(cfg.stages),
            "max_size": cfg.max_size,
            "budget": cfg.budget,
        },
        "conventions": {
            "products": "binary products nest left; a triple a x b x c means (a x b) x c",
            "power_equivalence": "predicate equivalence on a power object is the"
            " pointwise biconditional of memberships, quantified over the left"
            " factor of the left-nested triple",
            "class_graph": "point-to-class graphs live over left-nested triples"
            " carrier x target x carrier, quantified along the outer pair",
        },
        "stages": [],
    }
    all_reports = []

    trace["stages"].append(
        {
            "kind": "model",
            "objects": object_census(bundle.doctrine, seeds),
            "hom_census": hom_census(bundle.base, seeds, cfg.budget),
        }
    )

    prev_seeds = seeds
    for st in pipe.stages:
        laws = check_category_laws(st.doctrine.base, st.seeds, budget=cfg.budget)
        battery = doctrine_battery(st.doctrine, st.seeds, budget=cfg.budget)
        unit = check_logical_morphism(st.unit, prev_seeds, budget=cfg.budget)
        stage_reports = [laws] + battery + [unit]
        all_reports += stage_reports
        trace["stages"].append(
            {
                "kind": st.kind,
                "ok": all_ok(stage_reports),
                "objects": object_census(st.doctrine, st.seeds),
                "hom_census": hom_census(st.doctrine.base, st.seeds, cfg.budget),
                "reports": [r.to_dict() for r in stage_reports],
            }
        )
        prev_seeds = st.seeds

    final_d, final_seeds = pipe.final, pipe.final_seeds
    probes = readiness_probes(final_d, final_seeds)
    ext = check_extensional(final_d, probes, budget=cfg.budget)
    cc = check_cauchy_complete(final_d, probes, budget=cfg.budget)
    all_reports += [ext, cc]
    trace["readiness"] = {
        "stage": pipe.stages[-1].kind if pipe.stages else "model",
        "reports": [ext.to_dict(), cc.to_dict()],
    }

    if "topos" in cfg.stages:
        ts, treports = check_topos(final_d, final_seeds, budget=cfg.budget)
        all_reports += treports
        trace["topos"] = {
            "assembled": ts is not None,
            "reports": [r.to_dict() for r in treports],
        }
        if ts is not None:
            trace["census"] = topos_census(ts, final_seeds, budget=cfg.budget)

    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, TRACE_NAME)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace, fh, sort_keys=True, indent=2)
        fh.write("\n")

    emit_reports(
        cfg,
        {"command": "pipeline", "model": bundle.name, "trace": path},
        all_reports,
    )
    return EXIT_OK if all_ok(all_reports) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# export


def trace_reports(trace):
    out = []
    for st in trace.get("stages", []):
        out.extend(st.get("reports", []))
    out.extend(trace.get("readiness", {}).get("reports", []))
    out.extend(trace.get("topos", {}).get("reports", []))
    return out


def write_census_csv(trace, path):
    rows = trace.get("census", {}).get("objects")
    if rows is None:
        rows = []
        for st in trace.get("stages", []):
            for r in st.get("objects", []):
                rows.append(
                    {
                        "object": r["object"],
                        "index": st["kind"],
                        "fiber_size": r["fiber_bound"],
                        "global_points": "",
                    }
                )
    fields = ["object", "index", "fiber_size", "global_points", "power",
              "power_global_points"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})


def write_homs_csv(trace, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "source", "target", "count"])
        for st in trace.get("stages", []):
            for cell in st.get("hom_census", []):
                w.writerow(
                    [
                        st["kind"],
                        cell["source"],
                        cell["target"],
                        "" if cell["count"] is None else cell["count"],
                    ]
                )


def write_dot(trace, path):
    """The registered fragment of the last stage as a graph: nodes are
    objects, edges carry hom counts."""
    stages = trace.get("stages", [])
    last = stages[-1] if stages else {"kind": "model", "objects": [], "hom_census": []}
    lines = ["digraph fragment {"]
    lines.append('  label="stage %s";' % last["kind"])
    for r in last.get("objects", []):
        lines.append('  "%s" [label="%s\\nfiber %s"];' % (
            r["object"], r["object"], r["fiber_bound"]))
    for cell in last.get("hom_census", []):
        if cell["count"]:
            lines.append('  "%s" -> "%s" [label="%d"];' % (
                cell["source"], cell["target"], cell["count"]))
    lines.append("}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def render_figures(trace, out_dir):
    """Census and hom-growth figures; rendered bytes are not covered by
    the determinism contract, unlike the delimited files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    stages = trace.get("stages", [])

    rows = trace.get("census", {}).get("objects") or []
    if rows:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        labels = [r["object"][:16] for r in rows]
        pts = [r.get("global_points") or 0 for r in rows]
        ppts = [r.get("power_global_points") or 0 for r in rows]
        x = range(len(rows))
        ax.bar([i - 0.2 for i in x], pts, width=0.4, label="global points")
        ax.bar([i + 0.2 for i in x], ppts, width=0.4, label="power points")
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
        ax.set_title("final-stage census")
        ax.legend()
        fig.tight_layout()
        p = os.path.join(out_dir, "census.png")
        fig.savefig(p)
        plt.close(fig)
        written.append(p)

    if stages:
        # pair identity is positional: object ids change per stage
        ncells = min(len(st.get("hom_census", [])) for st in stages)
        series = [[] for _ in range(ncells)]
        names = [None] * ncells
        for st in stages:
            cells = st.get("hom_census", [])
            for i in range(ncells):
                series[i].append(cells[i]["count"])
                names[i] = "%s->%s" % (cells[i]["source"][:10], cells[i]["target"][:10])
        fig, ax = plt.subplots(figsize=(6, 3.5))
        xs = range(len(stages))
        for i, ys in enumerate(series):
            ax.plot(list(xs), [y if y is not None else float("nan") for y in ys],
                    marker="o", label=names[i], linewidth=1)
        ax.set_xticks(list(xs))
        ax.set_xticklabels([st["kind"] for st in stages])
        ax.set_ylabel("|hom|")
        ax.set_title("hom growth along the pipeline")
        ax.legend(fontsize=6)
        fig.tight_layout()
        p = os.path.join(out_dir, "hom_growth.png")
        fig.savefig(p)
        plt.close(fig)
        written.append(p)

    return written


def cmd_export(cfg):
    """Render the trace of a prior pipeline run to delimited files, a DOT
    fragment and figures."""
    path = os.path.join(cfg.out, TRACE_NAME)
    if not os.path.exists(path):
        raise ValueError(
            "no %s under %s; run the pipeline command first" % (TRACE_NAME, cfg.out)
        )
    with open(path, "r", encoding="utf-8") as fh:
        trace = json.load(fh)

    written = []
    p = os.path.join(cfg.out, "census.csv")
    write_census_csv(trace, p)
    written.append(p)
    p = os.path.join(cfg.out, "homs.csv")
    write_homs_csv(trace, p)
    written.append(p)
    p = os.path.join(cfg.out, "fragment.dot")
    write_dot(trace, p)
    written.append(p)
    p = os.path.join(cfg.out, "report.json")
    with open(p, "w", encoding="utf-8") as fh:
        json.dump(
            {"model": trace.get("model"), "reports": trace_reports(trace)},
            fh,
            sort_keys=True,
            indent=2,
        )
        fh.write("\n")
    written.append(p)
    written += render_figures(trace, cfg.out)

    if cfg.format == "structured":
        print(json.dumps({"written": sorted(written)}, sort_keys=True, indent=2))
    else:
        for p in sorted(written):
            print("wrote", p)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tritopos",
        description="verify doctrine models, run the completion pipeline,"
        " export traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("verify", "doctrine battery on a model"),
        ("pipeline", "staged completion with per-stage verification"),
        ("export", "render a prior trace to csv/dot/json/png"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--model", default="builtin:finset",
                       help="model document path or builtin:<name>")
        p.add_argument("--stages", default="c,q,e,l,topos",
                       help="comma list: prefix of c,q,e,l plus optional topos")
        p.add_argument("--max-size", type=int, default=2, dest="max_size",
                       help="largest carrier size in the probe fragment")
        p.add_argument("--budget", type=int, default=1_000_000,
                       help="enumeration budget")
        p.add_argument("--out", default="tritopos-out",
                       help="directory for traces and exports")
        p.add_argument("--format", default="human",
                       choices=("human", "structured"))
    return parser


COMMANDS = {
    "verify": cmd_verify,
    "pipeline": cmd_pipeline,
    "export": cmd_export,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            model=args.model,
            stages=parse_stages(args.stages),
            max_size=args.max_size,
            budget=args.budget,
            out=args.out,
            format=args.format,
        )
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except (NotEnumerable, BudgetExceeded) as e:
        print("budget exceeded: %s" % e, file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError, json.JSONDecodeError, Unsupported, LatticeError) as e:
        print("input error: %s" % e, file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
