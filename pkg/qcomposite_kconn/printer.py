from typing import Any

from rich.console import Console, Group
from rich.live import Live
from rich.spinner import Spinner


class Printer:
    """
    Live trial counters for the points of a run, one line per point. Renders on
    stderr so the CSV written to stdout is untouched.
    """

    def __init__(self, console: Console | None = None) -> None:
        self.live = Live(console=console or Console(stderr=True), transient=False)
        self.points: dict[str, tuple[str, int, int]] = {}
        self.live.start()

    def end(self) -> None:
        self.live.stop()

    def update_point(self, point_id: str, label: str, done: int, total: int) -> None:
        self.points[point_id] = (label, done, total)
        self.flush()

    def finished_points(self) -> int:
        return sum(done >= total for _, done, total in self.points.values())

    def flush(self) -> None:
        renderables: list[Any] = []
        for label, done, total in self.points.values():
            text = f"{label}: {done}/{total} trials"
            if done >= total:
                renderables.append("✅ " + text)
            else:
                renderables.append(Spinner("dots", text=text))
        if len(self.points) > 1:
            renderables.append(f"{self.finished_points()}/{len(self.points)} points finished")
        self.live.update(Group(*renderables))
