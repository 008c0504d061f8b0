"""Compare computed quantities against the reference values in data/reference."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from rich.console import Console
from rich.table import Table

from src.similarity import (
    CubicForm,
    ProfileProblem,
    b0,
    default_mu_bracket,
    find_mu,
    find_nh,
    shoot,
    solve_l,
)

REFERENCE = Path("data/reference/reported_values.json")

console = Console()


def load_json(path: Path) -> dict:
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return {}


def check(table: Table, label: str, computed: float, expected: float, tol: float) -> bool:
    ok = abs(computed - expected) <= tol
    table.add_row(label, f"{computed:.10g}", f"{expected:.10g}", f"{tol:g}",
                  "[green]ok[/green]" if ok else "[red]off[/red]")
    return ok


def audit_cubic(table: Table, ref: dict) -> list[bool]:
    results = []
    for n, value in ref.get("interface_coefficient", {}).items():
        results.append(check(table, f"B0 n={n}", b0(float(n)), value, 1e-6))
    for n, value in ref.get("cubic_roots_scaled", {}).items():
        results.append(check(table, f"l scaled n={n}", solve_l(float(n))[0], value, 2e-4))
    for n, value in ref.get("cubic_roots_exact", {}).items():
        l, _ = solve_l(float(n), CubicForm.EXACT)
        results.append(check(table, f"l exact n={n}", l, value, 1e-3))
    return results


def audit_shots(table: Table, ref: dict) -> list[bool]:
    results = []
    for n, values in ref.get("critical_shots", {}).items():
        problem = ProfileProblem(n=float(n))
        critical = find_mu(problem, *default_mu_bracket(problem.n), 1e-10)
        mu_tol = 1e-6 if problem.n < 3.0 else 1e-2
        results.append(check(table, f"mu* n={n}", critical.mu_star, values["mu"], mu_tol))
        results.append(check(table, f"y0 n={n}", critical.y0, values["y0"], 1e-2))
    for n, values in ref.get("reported_shots", {}).items():
        result = shoot(ProfileProblem(n=float(n)), values["mu"])
        zero = result.zeros[0] if result.zeros else float("nan")
        results.append(check(table, f"first zero n={n}", zero, values["first_zero"], 1e-2))
    for n, value in ref.get("critical_first_zeros", {}).items():
        critical = find_mu(ProfileProblem(n=float(n)), -1.0, 0.0, 1e-10)
        zeros = critical.best.zeros
        zero = zeros[0] if zeros else float("nan")
        results.append(check(table, f"critical first zero n={n}", zero, value, 5e-2))
    return results


def audit_oscillation(table: Table, ref: dict) -> list[bool]:
    if "heteroclinic_exponent" not in ref:
        return []
    n_h = find_nh(1.7, 1.8, 1e-3)
    return [check(table, "n_h", n_h, ref["heteroclinic_exponent"], 2e-2)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true", help="also run shots and bisections")
    args = parser.parse_args()

    ref = load_json(REFERENCE)
    table = Table(title="Reference audit")
    for column in ("quantity", "computed", "reference", "tol", ""):
        table.add_column(column)

    results = audit_cubic(table, ref)
    if args.full:
        results += audit_shots(table, ref)
        results += audit_oscillation(table, ref)
    console.print(table)
    console.print(f"{sum(results)}/{len(results)} within tolerance")


if __name__ == "__main__":
    main()
