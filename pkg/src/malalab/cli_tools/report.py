"""CSV reports with provenance, and their markdown summary.

A report file is a plain CSV body framed by ``#`` lines:

    # tool=mala-lab
    # version=0.1.0
    # schema=1
    # experiment=verify-moments
    # seed=42
    # config={...}
    # started=2026-01-01T00:00:00+00:00
    # wall_clock_s=1.234
    lemma,target,ell_or_delta,estimate,ci_lo,ci_hi,bound,pass
    ...
    # slope=...              (experiment-specific footers)
    # totals pass=4 fail=0

Only the ``#`` header varies between runs of the same config and seed.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from malalab._version import __csv_schema_version__, __version__
from malalab.errors import ReportSchemaError

TOOL_NAME = "mala-lab"
PASS = "PASS"
FAIL = "FAIL"

SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "lemma": ("lemma", "target", "ell_or_delta", "estimate", "ci_lo", "ci_hi", "bound", "pass"),
    "mixing": ("dim", "eta", "tau_hat", "predicted_n", "predicted_n_kappa"),
    "conductance": ("s", "phi_s", "bound_check"),
    "lovasz": ("n", "tv", "bound", "slack", "pass"),
    "decomposition": ("point", "delta", "b_eta", "grad_diff_term", "residual", "pass"),
    "overlap": ("distance", "eta", "tv_exact", "tv_bound", "pass"),
}


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return PASS if value else FAIL
    if isinstance(value, (int, str)):
        return str(value)
    return repr(float(value))


@dataclass
class Report:
    """Rows and footers of one experiment run.

    Rows that carry an assertion are counted through ``passed`` in ``add_row``.
    """

    experiment: str
    columns: Sequence[str]
    rows: List[List[str]] = field(default_factory=list)
    footer: List[Tuple[str, str]] = field(default_factory=list)
    n_pass: int = 0
    n_fail: int = 0
    artifacts: List[Path] = field(default_factory=list)

    def add_row(self, values: Sequence[Any], passed: Optional[bool] = None) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} cells, got {len(values)}")
        self.rows.append([format_cell(v) for v in values])
        if passed is not None:
            self.count(passed)

    def count(self, passed: bool) -> None:
        if passed:
            self.n_pass += 1
        else:
            self.n_fail += 1

    def add_footer(self, key: str, value: Any) -> None:
        self.footer.append((key, value if isinstance(value, str) else format_cell(value)))

    @property
    def ok(self) -> bool:
        return self.n_fail == 0

    def body(self) -> str:
        """Header row, data rows and footers; deterministic in config and seed."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        for key, value in self.footer:
            buf.write(f"# {key}={value}\n")
        buf.write(f"# totals pass={self.n_pass} fail={self.n_fail}\n")
        return buf.getvalue()


def provenance(
    experiment: str, seed: int, config: Dict[str, Any], started: str, wall_clock_s: float
) -> List[Tuple[str, str]]:
    """Ordered header fields shared by every file a run writes."""
    return [
        ("tool", TOOL_NAME),
        ("version", __version__),
        ("schema", __csv_schema_version__),
        ("experiment", experiment),
        ("seed", str(seed)),
        ("config", json.dumps(config, sort_keys=True, separators=(",", ":"))),
        ("started", started),
        ("wall_clock_s", f"{wall_clock_s:.3f}"),
    ]


def write_report(
    path: Union[str, Path],
    report: Report,
    seed: int,
    config: Dict[str, Any],
    started: str,
    wall_clock_s: float,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = provenance(report.experiment, seed, config, started, wall_clock_s)
    with path.open("w", encoding="utf-8", newline="") as fp:
        for key, value in header:
            fp.write(f"# {key}={value}\n")
        fp.write(report.body())
    return path


def write_sidecar(artifact: Union[str, Path], fields: Sequence[Tuple[str, str]]) -> Path:
    """Provenance for a binary artifact, as ``<artifact>.json`` next to it."""
    path = Path(f"{artifact}.json")
    data = dict(fields)
    data["config"] = json.loads(data["config"])
    data["artifact"] = Path(artifact).name
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


# --- Reading back ---------------------------------------------------------------


@dataclass
class ParsedReport:
    path: Path
    schema: str
    meta: Dict[str, str]
    footer: Dict[str, str]
    columns: List[str]
    rows: List[Dict[str, str]]

    @property
    def totals(self) -> Tuple[int, int]:
        raw = self.footer.get("totals", "")
        parts = dict(item.split("=", 1) for item in raw.split() if "=" in item)
        return int(parts.get("pass", 0)), int(parts.get("fail", 0))


def _split_meta(line: str) -> Tuple[str, str]:
    text = line[1:].strip()
    if text.startswith("totals "):
        return "totals", text[len("totals ") :]
    key, _, value = text.partition("=")
    return key.strip(), value


def _schema_for(columns: Sequence[str]) -> Optional[str]:
    for name, expected in SCHEMAS.items():
        if tuple(columns) == expected:
            return name
    if len(columns) >= 3 and columns[0] == "step" and columns[-1] == "accepted":
        if all(c == f"q_{i + 1}" for i, c in enumerate(columns[1:-1])):
            return "sample"
    return None


def read_report(path: Union[str, Path]) -> ParsedReport:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ReportSchemaError(str(path), f"cannot read ({exc})") from exc
    meta: Dict[str, str] = {}
    footer: Dict[str, str] = {}
    body: List[str] = []
    for line in lines:
        if line.startswith("#"):
            key, value = _split_meta(line)
            (footer if body else meta)[key] = value
        elif line.strip():
            body.append(line)

    if meta.get("tool") != TOOL_NAME:
        raise ReportSchemaError(str(path), "no mala-lab provenance header")
    if meta.get("schema") != __csv_schema_version__:
        raise ReportSchemaError(str(path), f"unsupported schema version {meta.get('schema')!r}")
    if not body:
        raise ReportSchemaError(str(path), "no CSV header row")
    reader = csv.reader(body)
    columns = next(reader)
    schema = _schema_for(columns)
    if schema is None:
        raise ReportSchemaError(str(path), f"unknown columns {','.join(columns)}")
    rows = [dict(zip(columns, row)) for row in reader]
    return ParsedReport(path, schema, meta, footer, columns, rows)


def _table(headers: Sequence[str], rows: Iterable[Sequence[str]]) -> List[str]:
    out = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    out.extend("| " + " | ".join(row) + " |" for row in rows)
    return out


def _num(text: str, digits: int = 6) -> str:
    if text == "":
        return "-"
    try:
        return f"{float(text):.{digits}g}"
    except ValueError:
        return text


def _lemma_section(rep: ParsedReport) -> List[str]:
    out: List[str] = []
    groups: Dict[str, List[Dict[str, str]]] = {}
    for row in rep.rows:
        groups.setdefault(row["lemma"], []).append(row)
    for lemma, rows in groups.items():
        label = "delta" if lemma == "acceptance_tail" else "ell"
        out += ["", f"### {lemma}", ""]
        out += _table(
            [label, "target", "estimate", "CI", "bound", "margin", "result"],
            (
                [
                    _num(r["ell_or_delta"]),
                    r["target"],
                    _num(r["estimate"]),
                    f"[{_num(r['ci_lo'])}, {_num(r['ci_hi'])}]",
                    _num(r["bound"]),
                    _num(str(float(r["bound"]) - float(r["ci_lo"]))),
                    r["pass"],
                ]
                for r in rows
            ),
        )
    return out


def _tau_cell(text: str) -> str:
    if text == "":
        return "not reached"
    if text == "0":
        return "0 (start within eps)"
    return text


def _mixing_section(rep: ParsedReport) -> List[str]:
    out = [""]
    out += _table(
        ["d", "eta", "tau_hat", "predicted n (trace)", "predicted n (kappa)"],
        (
            [
                r["dim"],
                _num(r["eta"]),
                _tau_cell(r["tau_hat"]),
                _num(r["predicted_n"]),
                _num(r["predicted_n_kappa"]),
            ]
            for r in rep.rows
        ),
    )
    f = rep.footer
    out += [
        "",
        f"- fitted slope of log tau_hat on log d: {_num(f.get('slope', ''), 4)}"
        f" (CI {f.get('slope_ci', '-')})",
        f"- predicted exponent, trace rule: {_num(f.get('predicted_exponent', ''), 4)} (order 1)",
        f"- predicted exponent, kappa rule: {_num(f.get('predicted_exponent_kappa', ''), 4)}"
        " (order 1.5)",
    ]
    if "resolved_dims" in f:
        out.append(f"- dims with a resolved mixing time: {f['resolved_dims'] or 'none'}")
    if "tv" in f:
        out.append(f"- distance: {f['tv']}")
    return out


def _generic_section(rep: ParsedReport, shown: Sequence[str]) -> List[str]:
    return [""] + _table(shown, ([_num(r[c]) for c in shown] for r in rep.rows))


def _lovasz_section(rep: ParsedReport) -> List[str]:
    slack = [float(r["slack"]) for r in rep.rows]
    worst = min(range(len(slack)), key=slack.__getitem__) if slack else None
    out = ["", f"- iterations checked: {len(rep.rows)}"]
    if worst is not None:
        out.append(f"- smallest slack {slack[worst]:.3e} at n={rep.rows[worst]['n']}")
    for key in ("phi_s", "M", "s", "tau_exact", "iteration_bound"):
        if key in rep.footer:
            out.append(f"- {key}: {rep.footer[key]}")
    return out


def _sample_section(rep: ParsedReport) -> List[str]:
    moved = sum(int(r["accepted"]) for r in rep.rows[1:])
    steps = max(len(rep.rows) - 1, 0)
    out = ["", f"- recorded steps: {steps}"]
    if steps:
        out.append(f"- recorded moves: {moved} ({moved / steps:.4f})")
    for key, value in rep.footer.items():
        if key != "totals":
            out.append(f"- {key}: {value}")
    return out


def _decomposition_section(rep: ParsedReport) -> List[str]:
    residual = max((float(r["residual"]) for r in rep.rows), default=0.0)
    return ["", f"- phase points: {len(rep.rows)}", f"- largest residual: {residual:.3e}"]


def _overlap_section(rep: ParsedReport) -> List[str]:
    worst = max(
        (float(r["tv_exact"]) / float(r["tv_bound"]) for r in rep.rows if float(r["tv_bound"]) > 0),
        default=0.0,
    )
    return ["", f"- grid points: {len(rep.rows)}", f"- largest tv_exact / tv_bound: {worst:.4f}"]


def _provenance_lines(rep: ParsedReport) -> List[str]:
    meta = rep.meta
    tool = f"{meta.get('tool', TOOL_NAME)} {meta.get('version', '?')}"
    return [
        "",
        f"- {tool}, schema {meta.get('schema', '?')}",
        f"- started {meta.get('started', '?')}, wall clock {meta.get('wall_clock_s', '?')} s",
        f"- config `{meta.get('config', '{}')}`",
    ]


def report_summary(paths: Sequence[Union[str, Path]]) -> str:
    """Markdown with one section per report; empty input gives an empty string."""
    sections: List[str] = []
    for path in paths:
        rep = read_report(path)
        n_pass, n_fail = rep.totals
        status = PASS if n_fail == 0 else FAIL
        lines = [
            f"## {rep.meta.get('experiment', rep.schema)} ({rep.path.name})",
            "",
            f"seed {rep.meta.get('seed', '?')}, {n_pass} passed, {n_fail} failed: **{status}**",
        ]
        lines += _provenance_lines(rep)
        if rep.schema == "lemma":
            lines += _lemma_section(rep)
        elif rep.schema == "mixing":
            lines += _mixing_section(rep)
        elif rep.schema == "conductance":
            lines += _generic_section(rep, ["s", "phi_s", "bound_check"])
        elif rep.schema == "lovasz":
            lines += _lovasz_section(rep)
        elif rep.schema == "sample":
            lines += _sample_section(rep)
        elif rep.schema == "decomposition":
            lines += _decomposition_section(rep)
        else:
            lines += _overlap_section(rep)
        sections.append("\n".join(lines))
    return "\n\n".join(sections) + ("\n" if sections else "")
