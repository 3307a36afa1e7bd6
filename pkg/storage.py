"""
File storage for solved states, check reports and correlator tables
"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from config import settings
from exceptions import ConfigurationError
from logger import setup_logger
from psdo import PsDO
from series import TSeries
from solver import HierarchyState, TruncationSpec
from wave import WaveState

logger = setup_logger(__name__)

STATE_FORMAT = "gd-state/1"
PathLike = Union[str, Path]


def dump_json(data: Any) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline"""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _stable_layers(layers: Iterable[Dict[str, Any]]) -> List[Dict[str, Any]]:
    # wall-clock timings live in the run ledger, not in the state file
    return [{k: v for k, v in layer.items() if k != "millis"} for layer in layers]


class StateStore:
    """Reads and writes engine artifacts as canonical JSON"""

    def __init__(self, base_dir: Optional[PathLike] = None):
        """
        Initialize store

        Args:
            base_dir: Directory relative paths are resolved against (current directory if not provided)
        """
        self.base_dir = Path(base_dir) if base_dir is not None else None

    def resolve(self, path: PathLike) -> Path:
        path = Path(path)
        if self.base_dir is not None and not path.is_absolute():
            path = self.base_dir / path
        return path

    def _write(self, path: PathLike, text: str) -> Path:
        target = self.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        return target

    # State

    def state_to_json(self, state: HierarchyState) -> Dict[str, Any]:
        wave = state.wave
        provenance = {
            "layers": _stable_layers(state.provenance.get("layers", [])),
        }
        data: Dict[str, Any] = {
            "format": STATE_FORMAT,
            "spec": state.spec.model_dump(),
            "solvedDegree": state.solved_degree,
            "L": state.L.to_json(),
            "Phi": None,
            "phi": None,
            "provenance": provenance,
        }
        if wave is not None:
            data["Phi"] = wave.Phi.to_json()
            data["phi"] = wave.phi.to_json()
            provenance["waveLayers"] = _stable_layers(wave.provenance.get("layers", []))
        return data

    def save_state(self, state: HierarchyState, path: Optional[PathLike] = None) -> Path:
        """
        Write state.json

        Args:
            state: Solved state (with its wave function when present)
            path: Target file (uses settings.state_path if not provided)

        Returns:
            Written path
        """
        target = self._write(path or settings.state_path, dump_json(self.state_to_json(state)))
        logger.info(f"Saved state to {target}")
        return target

    def state_from_json(self, data: Dict[str, Any]) -> HierarchyState:
        if data.get("format") != STATE_FORMAT:
            raise ConfigurationError(f"unsupported state format {data.get('format')!r}")
        spec = TruncationSpec.build(**data["spec"])
        space = spec.space()
        zero = TSeries.zero(space, spec.degree)
        coeffs = {
            int(item["order"]): TSeries.from_json(item["series"], space)
            for item in data["L"]["coefficients"]
        }
        L = PsDO(coeffs, zero, order=spec.r)
        provenance = {"layers": list(data.get("provenance", {}).get("layers", [])), "checks": {}}
        state = HierarchyState(spec=spec, L=L, solved_degree=int(data["solvedDegree"]), provenance=provenance)
        if data.get("Phi") is not None:
            Phi = TSeries.from_json(data["Phi"], space)
            phi = TSeries.from_json(data["phi"], space)
            strata = {g: phi.eps_coefficient(g - 1) for g in range(spec.genus_max + 1)}
            state.wave = WaveState(
                Phi=Phi,
                phi=phi,
                strata=strata,
                genus_max=spec.genus_max,
                provenance={"layers": list(data["provenance"].get("waveLayers", []))},
            )
        return state

    def load_state(self, path: Optional[PathLike] = None) -> HierarchyState:
        """
        Read state.json

        Raises:
            ConfigurationError: if the file is missing or malformed
        """
        source = self.resolve(path or settings.state_path)
        if not source.exists():
            raise ConfigurationError(f"state file not found: {source}")
        try:
            with open(source, 'r', encoding='utf-8') as f:
                data = json.load(f)
            state = self.state_from_json(data)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"malformed state file {source}: {e}") from e
        logger.info(f"Loaded state from {source} (r={state.r}, N={state.spec.times}, D={state.spec.degree})")
        return state

    # Reports and tables

    def save_report(self, reports: Iterable[Any], path: Optional[PathLike] = None) -> Path:
        """Write the check reports as a JSON list"""
        payload = [report.model_dump() for report in reports]
        target = self._write(path or settings.report_path, dump_json(payload))
        logger.info(f"Saved {len(payload)} check reports to {target}")
        return target

    def save_table(self, table: Any, path: Optional[PathLike] = None, csv_path: Optional[PathLike] = None) -> List[Path]:
        """Write a correlator table as JSON and optionally as CSV"""
        payload = {
            "r": table.r,
            "flavor": table.flavor,
            "genus": table.genus,
            "conjectural": table.conjectural,
            "metadata": table.metadata,
            "entries": table.to_records(),
        }
        written = [self._write(path or settings.correlators_path, dump_json(payload))]
        if csv_path is not None:
            written.append(self._write(csv_path, table.to_csv()))
        logger.info(f"Saved {len(table.entries)} {table.flavor} correlators to {', '.join(map(str, written))}")
        return written


# Global store instance
state_store = StateStore()
