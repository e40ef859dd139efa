"""Text, JSON and DOT renderings of reports and trees."""
from __future__ import annotations

import json
from fractions import Fraction

from .engine import KwhTree, SecurityLeak, figure_view
from .symbolic import render_poly
from .verifier import TerminationClass, VerificationReport


def rat(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def report_to_dict(report: VerificationReport) -> dict:
    def witness(v):
        return None if v.ok else v.witness

    return {
        "protocol": report.protocol,
        "mode": report.mode.value,
        "secure": report.secure.ok,
        "correct": report.correct.ok,
        "termination": {
            "class": report.termination.kind.value,
            "cycles": list(report.termination.cycles),
        },
        "expected": {k: rat(v) for k, v in report.expected.items()},
        "restart_free": report.restart_free,
        "shuffles": [
            {
                "at": row.at,
                "perms": row.label(),
                "uniform": row.uniform,
                "closed": row.closed,
                "group_order": row.group_order,
            }
            for row in report.shuffles.rows
        ],
        "finite": report.finite,
        "uniform": report.uniform,
        "closed": report.closed,
        "witness": {
            "security": witness(report.secure),
            "correctness": witness(report.correct),
            "termination": report.termination.reason,
        },
        "diagnostics": [str(d) for d in report.diagnostics],
    }


def report_to_json(report: VerificationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


_TERM_TEXT = {
    TerminationClass.FINITE: "finite",
    TerminationClass.LAS_VEGAS: "Las Vegas",
    TerminationClass.NON_CONVERGENT: "non-convergent",
}
_METRIC_TEXT = {
    "turn_actions": "expected revealing turns",
    "shuffle_actions": "expected shuffles",
    "branch_passes": "expected branch passes",
}


def _yn(b: bool) -> str:
    return "yes" if b else "no"


def report_to_text(report: VerificationReport) -> str:
    out = [f"protocol: {report.protocol} ({report.mode.value})"]
    out.append(f"secure: {report.secure}")
    out.append(f"correct: {report.correct}")
    term = _TERM_TEXT[report.termination.kind]
    if report.termination.cycles:
        term += f" ({len(report.termination.cycles)} cycle-closing edges: "
        term += "; ".join(report.termination.cycles) + ")"
    out.append(f"termination: {term}")
    if report.termination.reason:
        out.append(f"  note: {report.termination.reason}")
    out.append(f"restart-free: {_yn(report.restart_free)}")
    for key, value in report.expected.items():
        out.append(f"{_METRIC_TEXT[key]}: {value}")
    out.append("shuffles:")
    for row in report.shuffles.rows:
        out.append(f"  [{row.at}] {row.label()}: uniform={_yn(row.uniform)} "
                   f"closed={_yn(row.closed)} |⟨Π⟩|={row.group_order}")
    t = report.table_row()
    out.append(f"properties: finite={t['finite']} uniform={t['uniform']} closed={t['closed']}")
    for d in report.diagnostics:
        out.append(f"diagnostic: {d}")
    return "\n".join(out) + "\n"


# -- trees -----------------------------------------------------------------

def tree_to_text(tree: KwhTree) -> str:
    out = []
    for node in tree.nodes:
        act = tree.action_at(node.id)
        out.append(f"n{node.id} [pc {node.pc}: {act.label() if act else 'end'}] "
                   f"visible {node.box.visible()}")
        for seq, poly in node.box.rows:
            out.append(f"    {seq.face_string()}  {render_poly(poly)}")
        for e in tree.out_edges(node.id):
            prob = f" Pr = {e.prob}" if e.kind == "reveal" else ""
            back = " [back]" if e.closing else ""
            out.append(f"  -> n{e.dst} {e.kind} {e.label}{prob}{back}")
    for leaf in tree.leaves:
        extra = f" {leaf.pattern} {render_poly(leaf.poly)} -> {leaf.bit}" if leaf.kind == "output" else ""
        out.append(f"leaf at n{leaf.node}: {leaf.label}{extra}")
    if tree.leak:
        out.append(f"LEAK at n{tree.leak.node}: {tree.leak.describe()}")
    if tree.error:
        out.append(f"ERROR: {tree.error}")
    if tree.frontier:
        out.append(f"budget exhausted: {len(tree.frontier)} states unexplored")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


_LEFT = "\\l"


def _q(*lines: str, sep: str = "\\n") -> str:
    return '"' + sep.join(map(_esc, lines)) + '"'


def tree_to_dot(tree) -> str:
    """DOT graph of the figure view: boxes, action edges, Pr on branches."""
    if isinstance(tree, SecurityLeak):
        tree = tree.tree
    view = figure_view(tree)
    lines = [f"digraph {_q(tree.ast.name)} {{", "  node [shape=box, fontname=monospace];"]
    for cid in sorted(view.boxes, key=lambda c: int(c[1:])):
        rows = [f"{s} {render_poly(p)}" for s, p in sorted(view.boxes[cid].items())]
        # \l left-justifies each row
        lines.append(f"  {cid} [label={_q(*rows, '', sep=_LEFT)}];")
    for lid in view.leaves:
        lines.append(f'  {lid} [shape=circle, label="✓"];')
    for i, (src, label, pattern, prob, dst) in enumerate(view.edges):
        text = [label]
        if pattern is not None:
            text.append(pattern)
        if prob is not None:
            text.append(f"Pr = {prob}")
        style = ", style=dashed, constraint=false" if i in view.back else ""
        lines.append(f"  {src} -> {dst} [label={_q(*text)}{style}];")
    if tree.leak is not None:
        src = f"n{tree.leak.node}"
        # the leaking node may have been merged into an earlier box
        for cid, rows in view.boxes.items():
            if rows == tree.nodes[tree.leak.node].box.face_rows():
                src = cid
                break
        lines.append(f'  leak [shape=octagon, color=red, label={_q("LEAK: " + tree.leak.describe())}];')
        lines.append(f"  {src} -> leak [color=red, label={_q(tree.leak.action)}];")
    if tree.error is not None:
        lines.append(f'  error [shape=octagon, color=red, label={_q("ERROR: " + tree.error)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
