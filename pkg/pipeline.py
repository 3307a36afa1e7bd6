"""
Run manager orchestrating solve, numbers and verify with the run ledger
"""
from typing import Any, Dict, List, Optional

from checks import CheckReport, run_checks
from config import settings
from database import Database, db
from exceptions import ConfigurationError, EngineError
from logger import setup_logger
from potentials import build_table
from solver import TruncationSpec, solve_jets
from storage import StateStore, state_store
from wave import solve_phi

logger = setup_logger(__name__)


class RunManager:
    """Run the engine commands and record each run in the ledger"""

    def __init__(self, database: Optional[Database] = None, store: Optional[StateStore] = None):
        self.db = database or db
        self.store = store or state_store

    def _fail(self, run_id: int, status: str, error: Exception) -> None:
        self.db.finish_run(run_id, status, error_message=f"{type(error).__name__}: {error}")

    def solve(
        self,
        r: int,
        times: int,
        degree: int,
        genus_max: Optional[int] = None,
        depth: Optional[int] = None,
        eps_cap: Optional[int] = None,
        out: Optional[str] = None,
        resume: bool = True,
        threads: Optional[int] = None
    ) -> Dict[str, Any]:
        """
        Solve the hierarchy and the wave function, then write state.json

        Args:
            r, times, degree, genus_max, depth, eps_cap: Truncation envelope
            out: State file (uses settings.state_path if not provided)
            resume: Continue from a compatible state already at `out`
            threads: Worker threads per layer

        Returns:
            Result dictionary with the solved state and the written path

        Raises:
            ConfigurationError: for an invalid truncation
        """
        out = out or settings.state_path
        params = {
            "r": r, "times": times, "degree": degree, "genus_max": genus_max,
            "depth": depth, "eps_cap": eps_cap, "out": out,
        }
        run = self.db.create_run("solve", params)
        logger.info(f"Starting solve run {run.id}: r={r}, N={times}, D={degree}")

        try:
            spec = TruncationSpec.build(
                r=r, times=times, degree=degree, genus_max=genus_max, depth=depth, eps_cap=eps_cap
            )
            previous = None
            if resume and self.store.resolve(out).exists():
                try:
                    previous = self.store.load_state(out)
                except ConfigurationError as e:
                    logger.warning(f"Ignoring stored state at {out}: {e}")

            state = solve_jets(spec, resume=previous, threads=threads)
            state.wave = solve_phi(state, threads=threads)
            path = self.store.save_state(state, out)

            summary = {
                "coefficient_terms": {f"f{i}": len(state.L.coeff(i)) for i in range(spec.r - 1)},
                "phi_terms": len(state.wave.phi),
                "layer_millis": [layer.get("millis") for layer in state.provenance.get("layers", [])],
                "wave_millis": [layer.get("millis") for layer in state.wave.provenance.get("layers", [])],
                "resumed_from": previous.solved_degree if previous is not None else None,
            }
            self.db.finish_run(run.id, "success", output_path=str(path), summary=summary)
            logger.info(f"Solve run {run.id} completed: {summary['coefficient_terms']}")
            return {
                "success": True,
                "run_id": run.id,
                "state": state,
                "path": str(path),
                "summary": summary,
            }

        except ConfigurationError as e:
            self._fail(run.id, "error", e)
            raise
        except EngineError as e:
            logger.error(f"Solve run {run.id} failed: {e}")
            self._fail(run.id, "failed", e)
            return {"success": False, "run_id": run.id, "error": str(e)}

    def numbers(
        self,
        state_path: Optional[str] = None,
        flavor: Optional[str] = None,
        genus: Optional[int] = None,
        out: Optional[str] = None,
        csv_path: Optional[str] = None
    ) -> Dict[str, Any]:
        """
        Export a correlator table from a stored state

        Raises:
            ConfigurationError: for a missing state, unknown flavor or unavailable genus
        """
        state_path = state_path or settings.state_path
        flavor = flavor or settings.flavor
        genus = settings.genus if genus is None else genus
        out = out or settings.correlators_path
        run = self.db.create_run("numbers", {
            "state": state_path, "flavor": flavor, "genus": genus, "out": out, "csv": csv_path,
        })

        try:
            state = self.store.load_state(state_path)
            table = build_table(state, flavor, genus)
            paths = self.store.save_table(table, out, csv_path)
            summary = {"entries": len(table.entries), "conjectural": table.conjectural}
            self.db.finish_run(
                run.id, "success",
                r=state.r, times=state.spec.times, degree=state.spec.degree,
                output_path=str(paths[0]), summary=summary,
            )
            return {
                "success": True,
                "run_id": run.id,
                "table": table,
                "paths": [str(p) for p in paths],
            }

        except ConfigurationError as e:
            self._fail(run.id, "error", e)
            raise
        except EngineError as e:
            logger.error(f"Numbers run {run.id} failed: {e}")
            self._fail(run.id, "failed", e)
            return {"success": False, "run_id": run.id, "error": str(e)}

    def verify(
        self,
        state_path: Optional[str] = None,
        checks: Optional[List[str]] = None,
        report_path: Optional[str] = None,
        threads: Optional[int] = None
    ) -> Dict[str, Any]:
        """
        Run checks against a stored state

        A configuration error still produces a report when `report_path` is
        given, then propagates.

        Returns:
            Result dictionary; success is True iff no check failed
        """
        state_path = state_path or settings.state_path
        names = list(checks or settings.checks)
        run = self.db.create_run("verify", {"state": state_path, "checks": names, "report": report_path})

        try:
            state = self.store.load_state(state_path)
            reports = run_checks(state, names, threads=threads)
        except ConfigurationError as e:
            self._fail(run.id, "error", e)
            if report_path:
                error_report = CheckReport(check="configuration", status="fail", note=str(e))
                self.store.save_report([error_report], report_path)
            raise

        self.db.add_check_results(run.id, reports)
        if report_path:
            self.store.save_report(reports, report_path)
        failed = [r.check for r in reports if r.status == "fail"]
        skipped = [r.check for r in reports if r.status == "skipped"]
        summary = {
            "checks": len(reports),
            "failed": len(failed),
            "skipped": len(skipped),
        }
        self.db.finish_run(
            run.id, "failed" if failed else "success",
            r=state.r, times=state.spec.times, degree=state.spec.degree,
            output_path=report_path, summary=summary,
        )
        if failed:
            logger.warning(f"Verify run {run.id}: failed checks {', '.join(failed)}")
        else:
            logger.info(f"Verify run {run.id}: all {len(reports)} reports passed or skipped")
        return {
            "success": not failed,
            "run_id": run.id,
            "reports": reports,
            "failed": failed,
        }

    def history(self, limit: int = 20, command: Optional[str] = None) -> List[Dict[str, Any]]:
        """Recent runs as plain dictionaries"""
        runs = self.db.get_recent_runs(limit=limit, command=command)
        return [
            {
                "id": run.id,
                "command": run.command,
                "status": run.status,
                "r": run.r,
                "times": run.times,
                "degree": run.degree,
                "output_path": run.output_path,
                "error": run.error_message,
                "started_at": run.started_at,
                "duration_ms": run.duration_ms,
            }
            for run in runs
        ]


# Global run manager instance
run_manager = RunManager()
