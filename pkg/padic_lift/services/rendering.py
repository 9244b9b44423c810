import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence

from jinja2 import Environment, PackageLoader, StrictUndefined

from padic_lift.schemas.schemas import Report, Tower
from padic_lift.services.graph import FunctionalGraph, stats

logger = logging.getLogger(__name__)


class RenderingService:
    """
    DOT and plain-text rendering through the package's jinja2 templates.
    Vertices are emitted in index order; fixed points come out as self-loops.
    """

    def __init__(self):
        self.env = Environment(
            loader=PackageLoader("padic_lift", "templates"),
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )

    def _render(self, template_name: str, **context: Any) -> str:
        return self.env.get_template(template_name).render(**context)

    # ============ GRAPHS ============

    def graph_to_dot(self, g: FunctionalGraph, name: str = "G", labels: Optional[Sequence[str]] = None) -> str:
        return self._render(
            "graph.dot.j2",
            name=name,
            vertices=range(g.size),
            successor=g.successor,
            labels=list(labels) if labels else None,
        )

    def write_dot(self, g: FunctionalGraph, path: str, name: str = "G", labels: Optional[Sequence[str]] = None) -> str:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.graph_to_dot(g, name, labels))
        logger.info(f"✅ DOT written to {path}")
        return path

    def write_panels(self, graphs: Sequence[FunctionalGraph], directory: str, stem: str, title: str) -> List[str]:
        """One DOT file per graph plus an index.txt listing them in order."""
        os.makedirs(directory, exist_ok=True)
        entries: List[Dict[str, Any]] = []
        paths = []
        for level, g in enumerate(graphs, start=1):
            filename = f"{stem}_{level}.dot"
            paths.append(self.write_dot(g, os.path.join(directory, filename), name=f"{stem}_{level}"))
            entries.append(
                {"level": level, "file": filename, "size": g.size, "cycle_lengths": stats(g).cycle_lengths}
            )
        with open(os.path.join(directory, "index.txt"), "w", encoding="utf-8") as fh:
            fh.write(self._render("tower_index.txt.j2", title=title, entries=entries))
        return paths

    def write_tower(self, t: Tower, directory: str, stem: str = "level") -> List[str]:
        return self.write_panels(t.levels, directory, stem, title=f"compatible tower over Z/{t.p}^n, n = 1..{t.height}")

    # ============ REPORTS ============

    def report_json(self, report: Report) -> str:
        # sort_keys keeps identical jobs byte-identical
        return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    def report_text(self, report: Report) -> str:
        dumped = report.model_dump(mode="json")

        def flatten(section: Dict[str, Any]) -> List[tuple]:
            return [(k, json.dumps(v, sort_keys=True)) for k, v in sorted(section.items())]

        return self._render(
            "report.txt.j2",
            report=report,
            job_fields=[(k, v) for k, v in sorted(dumped["job"].items()) if v not in (None, {}, [])],
            results=flatten(dumped["results"]),
            certificates=flatten(dumped["certificates"]),
        )


# Single instance for app-wide use
renderer = RenderingService()
