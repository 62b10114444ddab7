"""Step-based plugin system.

Each plugin exposes an init phase (once, before step zero), a pre-step
and a post-step phase, and may declare dependencies on other plugins.
Execution order is a topological order of the dependency graph that
follows registration order among independent plugins.
"""
from __future__ import annotations


class PluginCycle(Exception):
    pass


class MissingDependency(Exception):
    pass


class Plugin:
    name: str = "plugin"
    dependencies: tuple[str, ...] = ()
    step_interval_s: float | None = None   # None: every step

    def init(self, sim) -> None:
        pass

    def pre_step(self, sim, t: float) -> None:
        pass

    def post_step(self, sim, t: float) -> None:
        pass


class PluginRegistry:
    def __init__(self):
        self._plugins: dict[str, Plugin] = {}
        self._order: list[Plugin] | None = None

    def register(self, plugin: Plugin) -> None:
        """Add one plugin; its dependencies must already be present."""
        self.register_many([plugin])

    def register_many(self, plugins: list[Plugin]) -> None:
        """Add a batch that may depend on each other."""
        added = []
        for plugin in plugins:
            if plugin.name in self._plugins:
                raise ValueError(f"plugin {plugin.name!r} already registered")
            self._plugins[plugin.name] = plugin
            added.append(plugin.name)
        try:
            self._order = self._toposort()
        except (PluginCycle, MissingDependency):
            for name in added:
                del self._plugins[name]
            self._order = None
            raise

    def _toposort(self) -> list[Plugin]:
        names = list(self._plugins)
        position = {n: i for i, n in enumerate(names)}
        for p in self._plugins.values():
            for dep in p.dependencies:
                if dep not in self._plugins:
                    raise MissingDependency(
                        f"plugin {p.name!r} requires {dep!r}, which is not registered")
        remaining: dict[str, set[str]] = {
            n: set(self._plugins[n].dependencies) for n in names}
        order: list[Plugin] = []
        while remaining:
            ready = [n for n in names if n in remaining and not remaining[n]]
            if not ready:
                cyc = ", ".join(sorted(remaining))
                raise PluginCycle(f"dependency cycle among plugins: {cyc}")
            nxt = min(ready, key=lambda n: position[n])
            del remaining[nxt]
            order.append(self._plugins[nxt])
            for deps in remaining.values():
                deps.discard(nxt)
        return order

    def ordered(self) -> list[Plugin]:
        if self._order is None:
            self._order = self._toposort()
        return list(self._order)

    def __contains__(self, name: str) -> bool:
        return name in self._plugins

    def get(self, name: str) -> Plugin | None:
        return self._plugins.get(name)
