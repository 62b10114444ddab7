import pytest

from evcosim.plugins import (MissingDependency, Plugin, PluginCycle,
                             PluginRegistry)


def plug(name, deps=()):
    p = Plugin()
    p.name = name
    p.dependencies = tuple(deps)
    return p


class TestRegistry:
    def test_registration_order_kept_without_deps(self):
        reg = PluginRegistry()
        for n in ("c", "a", "b"):
            reg.register(plug(n))
        assert [p.name for p in reg.ordered()] == ["c", "a", "b"]

    def test_dependency_forces_order(self):
        reg = PluginRegistry()
        reg.register(plug("pdn"))
        reg.register(plug("v2g", deps=("pdn",)))
        assert [p.name for p in reg.ordered()] == ["pdn", "v2g"]

    def test_dependent_registered_first_still_ordered(self):
        reg = PluginRegistry()
        reg.register_many([plug("v2g", deps=("pdn",)), plug("pdn")])
        assert [p.name for p in reg.ordered()] == ["pdn", "v2g"]

    def test_missing_dependency(self):
        reg = PluginRegistry()
        with pytest.raises(MissingDependency):
            reg.register(plug("v2g", deps=("pdn",)))
        assert "v2g" not in reg

    def test_cycle_detected(self):
        reg = PluginRegistry()
        with pytest.raises(PluginCycle):
            reg.register_many([plug("a", deps=("b",)), plug("b", deps=("a",))])
        assert "a" not in reg and "b" not in reg

    def test_self_cycle(self):
        reg = PluginRegistry()
        with pytest.raises(PluginCycle):
            reg.register(plug("a", deps=("a",)))

    def test_duplicate_name_rejected(self):
        reg = PluginRegistry()
        reg.register(plug("a"))
        with pytest.raises(ValueError):
            reg.register(plug("a"))

    def test_order_stable_across_queries(self):
        reg = PluginRegistry()
        reg.register(plug("base"))
        reg.register(plug("mid", deps=("base",)))
        reg.register(plug("top", deps=("base", "mid")))
        first = [p.name for p in reg.ordered()]
        assert first == [p.name for p in reg.ordered()]
        assert first == ["base", "mid", "top"]
