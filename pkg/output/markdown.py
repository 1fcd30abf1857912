"""Markdown report generator for lab runs."""

from typing import Dict, List, Optional

from config import RunConfig
from modules.constants import Thresholds
from modules.fibration import FiberScan
from modules.limit import DecayCertificate, LimitSolution
from modules.sequences import LandscapeTable
from modules.solvers import ProbeResult, SolveReport


class MarkdownReport:
    """Generates compact markdown reports of one subcommand's results."""

    def __init__(self):
        self.lines: List[str] = []

    def generate(
        self,
        cfg: RunConfig,
        command: str,
        thresholds: Optional[Thresholds] = None,
        scan: Optional[FiberScan] = None,
        landscape: Optional[Dict[str, LandscapeTable]] = None,
        reports: Optional[List[SolveReport]] = None,
        ground_state: Optional[bool] = None,
        limit: Optional[LimitSolution] = None,
        decay: Optional[DecayCertificate] = None,
        asymptotics=None,
        probe: Optional[ProbeResult] = None,
    ) -> str:
        """Generate the full markdown report.

        Sections are emitted only for the results that were passed in.

        Args:
            cfg: Run configuration
            command: Subcommand that produced the results
            thresholds: Constants and thresholds
            scan: Fiber scan of one field
            landscape: V and W tables on the Pohozaev manifold
            reports: Local-minimum and mountain-pass reports
            ground_state: Outcome of the ground-state comparison
            limit: Whole-plane limit solution
            decay: Decay certificate of the limit profile
            asymptotics: Large-R sweep table
            probe: Critical-mass probe

        Returns:
            Markdown string
        """
        self.lines = []

        self._add_run_info(cfg, command)
        if thresholds is not None:
            self._add_thresholds(thresholds)
        if scan is not None:
            self._add_fiber_scan(scan)
        if landscape:
            self._add_landscape(landscape)
        if reports:
            self._add_solve_reports(reports, ground_state)
        if limit is not None:
            self._add_limit(limit, decay)
        if asymptotics is not None:
            self._add_asymptotics(asymptotics)
        if probe is not None:
            self._add_probe(probe)

        return "\n".join(self.lines)

    def _add_run_info(self, cfg: RunConfig, command: str):
        """Add the configuration line."""
        self.lines.append(f"## Run: {command}")
        self.lines.append(f"- Domain: {cfg.shape}, R={cfg.R:g}, n={cfg.n}")
        alpha = "auto" if cfg.alpha is None else f"{cfg.alpha:g}"
        self.lines.append(f"- Parameters: p={cfg.p:g}, alpha={alpha}, beta={cfg.beta:g}, rho={cfg.rho:g}")
        self.lines.append(f"- Config hash: `{cfg.config_hash()[:16]}`")
        self.lines.append("")

    def _add_thresholds(self, thr: Thresholds):
        """Add constants and coupling thresholds."""
        self.lines.append("## Thresholds")
        self.lines.append("")
        self.lines.append("| Quantity | Value |")
        self.lines.append("|----------|-------|")
        rows = [
            ("C_p (Gagliardo-Nirenberg)", thr.C_p),
            ("C_HLS (estimate, raw)", f"{self._format_number(thr.C_hls)} ({self._format_number(thr.C_hls_raw)})"),
            ("C_83", thr.C_83),
            ("x*", thr.x_star),
            ("f(x*)", thr.f_at_xstar),
            ("R0", thr.R0),
            ("alpha0", thr.alpha0),
            ("alpha1", thr.alpha1),
            ("alpha*", thr.alpha_star),
            ("rho*", thr.rho_star),
            ("lambda1 (unit domain)", thr.lambda1),
        ]
        for name, value in rows:
            shown = value if isinstance(value, str) else self._format_number(value)
            self.lines.append(f"| {name} | {shown} |")
        self.lines.append("")

        if not thr.defined:
            self.lines.append(f"- R={thr.R:g} does not exceed R0; the admissible set is empty")
        elif not thr.admissible:
            self.lines.append("- No admissible coupling: alpha* is not positive")
        self.lines.append("")

    def _add_fiber_scan(self, scan: FiberScan):
        """Add the critical time of the fiber map."""
        self.lines.append("## Fiber Map")
        self.lines.append(f"- Scan: t in [{scan.t[0]:.3g}, {scan.t[-1]:.3g}], {scan.t.size} points")
        self.lines.append(f"- Pohozaev time t_u: {scan.t_u:.10g}")
        self.lines.append(f"- h(t_u): {scan.h_at_tu:.10g}")
        self.lines.append(f"- Sign changes of h': {scan.sign_changes}")
        if not scan.unique:
            self.lines.append("- **Critical time is not unique**")
        if not scan.strict_max:
            self.lines.append("- **t_u is not a strict maximum on the scan**")
        self.lines.append("")

    def _add_landscape(self, landscape: Dict[str, LandscapeTable]):
        """Add V and W energy tables."""
        self.lines.append("## Energy Landscape on the Pohozaev Manifold")
        self.lines.append("")
        for kind, table in landscape.items():
            self.lines.append(f"### Family {kind}")
            self.lines.append("| n | t | J | kinetic | chi0 | Pohozaev residual |")
            self.lines.append("|---|---|---|---------|------|-------------------|")
            for row in table.rows:
                self.lines.append(
                    f"| {row.n:g} | {row.t:.8g} | {row.energy:.8g} | {row.kinetic:.6g} "
                    f"| {row.chi0:.6g} | {row.pohozaev_residual:.1e} |"
                )
            if table.slope is not None:
                self.lines.append(f"- Slope of J vs {table.abscissa}: {table.slope:.6g}")
            self.lines.append("")

    def _add_solve_reports(self, reports: List[SolveReport], ground_state: Optional[bool]):
        """Add solver outcomes with their certificates."""
        self.lines.append("## Solutions")
        self.lines.append("")
        self.lines.append("| Mode | Status | Energy | lambda | Iterations | Rel. residual |")
        self.lines.append("|------|--------|--------|--------|------------|---------------|")
        for report in reports:
            self.lines.append(
                f"| {report.mode} | {report.status} | {report.energy:.10g} | {report.lagrange_lambda:.8g} "
                f"| {report.iterations} | {report.relative_residual:.1e} |"
            )
        self.lines.append("")

        for report in reports:
            failed = self._failed_certificates(report)
            self.lines.append(f"### Certificates ({report.mode})")
            cert = report.certificates
            self.lines.append(f"- Gradient norm in Q: {cert.gradient_norm:.6g}")
            self.lines.append(f"- Pohozaev gap: {cert.pohozaev_gap:.2e}")
            if failed:
                self.lines.append(f"- **Failed**: {', '.join(failed)}")
            else:
                self.lines.append("- All certificates hold")
            self.lines.append("")

        if ground_state is not None:
            verdict = "is" if ground_state else "is not"
            self.lines.append(f"- The local minimizer {verdict} the ground state on the mass sphere")
            self.lines.append("")

    def _failed_certificates(self, report: SolveReport) -> List[str]:
        """Names of certificates that evaluated to False."""
        data = report.certificates.to_dict()
        return [name for name, value in data.items() if value is False]

    def _add_limit(self, sol: LimitSolution, decay: Optional[DecayCertificate]):
        """Add the whole-plane limit solution."""
        self.lines.append("## Whole-Plane Limit")
        self.lines.append(f"- lambda_bar: {sol.lambda_bar:.10g}")
        self.lines.append(f"- m_rho: {sol.m_rho:.10g}")
        self.lines.append(f"- Mass: {sol.mass:.10g}")
        self.lines.append(f"- Pohozaev gap: {sol.pohozaev_gap:.2e}")
        self.lines.append(f"- Profile ODE residual: {sol.ground.residual:.2e}")
        if decay is not None:
            state = "holds" if decay.holds else "**fails**"
            self.lines.append(
                f"- Decay bound C1 e^(-C2|x|) beyond R0={decay.R0:g}: {state} "
                f"(C1={decay.C1:.4g}, C2={decay.C2:.4g}, {decay.checked} samples)"
            )
        self.lines.append("")

    def _add_asymptotics(self, table):
        """Add the large-R sweep."""
        self.lines.append("## Large-R Asymptotics")
        self.lines.append(f"- Limit: lambda_bar={table.lambda_bar:.8g}, m_rho={table.m_rho:.8g}")
        if table.spacing is not None:
            self.lines.append(
                f"- Fixed spacing h={table.spacing:g}; gaps measured against the discrete limit "
                f"(lambda={self._format_optional(table.lambda_reference)})"
            )
        self.lines.append("")
        self.lines.append("| R | alpha | C_min | grad_min | lambda_mp | lambda gap | H1 distance | Status |")
        self.lines.append("|---|-------|-------|----------|-----------|------------|-------------|--------|")
        for row in table.rows:
            cells = [
                f"{row.R:g}",
                self._format_optional(row.alpha),
                self._format_optional(row.C_min),
                self._format_optional(row.grad_min),
                self._format_optional(row.lambda_mp),
                self._format_optional(row.lambda_gap),
                self._format_optional(row.h1_distance),
                row.status if row.ok else f"{row.status}: {row.message}",
            ]
            self.lines.append("| " + " | ".join(cells) + " |")
        self.lines.append("")

        if table.failed:
            self.lines.append(f"- **Failed rows**: {table.failed} of {len(table.rows)}; monotonicity flags need every row")
        flat = [name for name, ok in table.decreasing.items() if not ok]
        if flat:
            self.lines.append(f"- **Not strictly decreasing in R**: {', '.join(flat)}")
        else:
            self.lines.append("- All tracked gaps decrease in R")
        self.lines.append("")

    def _add_probe(self, probe: ProbeResult):
        """Add the critical-mass probe."""
        self.lines.append("## Critical Mass Probe")
        self.lines.append("")
        self.lines.append("| rho | alpha | Certified | Energy | Gradient norm | Reason |")
        self.lines.append("|-----|-------|-----------|--------|---------------|--------|")
        for row in probe.rows:
            self.lines.append(
                f"| {row.rho:g} | {self._format_optional(row.alpha)} | {'yes' if row.ok else 'no'} "
                f"| {self._format_optional(row.energy)} | {self._format_optional(row.gradient_norm)} | {row.reason} |"
            )
        self.lines.append("")
        if probe.rho_critical is None:
            self.lines.append("- No mass in the sweep was certified")
        else:
            self.lines.append(f"- Largest certified mass: {probe.rho_critical:g}")
        self.lines.append("")

    def _format_number(self, value: float) -> str:
        """Format a constant (handles tiny and huge magnitudes)."""
        if value != value:
            return "nan"
        magnitude = abs(value)
        if magnitude == 0:
            return "0"
        if magnitude >= 1e5 or magnitude < 1e-3:
            return f"{value:.4e}"
        return f"{value:.6g}"

    def _format_optional(self, value: Optional[float]) -> str:
        return "-" if value is None else self._format_number(value)
