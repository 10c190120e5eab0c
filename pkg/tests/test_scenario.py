"""Scenario parsing: schema, strict keys, line-numbered errors."""
import textwrap

import numpy as np
import pytest
from conftest import SCENARIOS

from catfix import spaces as sp
from catfix.errors import ConfigError
from catfix.scenario import load_scenario, load_verify_config, parse_scenario

BASE = """\
schema_version: 1
space: {type: hyperbolic, dim: 2}
set: {type: ball, center: [0.0, 0.0], radius: 2.0}
map: {type: rotation, center: [0.3, 0.2], angle: 1.0}
"""


def parse(text):
    return parse_scenario(textwrap.dedent(text))


def test_bundled_scenarios_load():
    for f in sorted(SCENARIOS.glob("*.yaml")):
        sc = load_scenario(f)
        assert sc.T.name


def test_defaults():
    sc = parse(BASE)
    assert sc.seed == 0
    assert isinstance(sc.K, sp.Ball)
    assert sc.config.accept_tol == 1e-8
    assert sc.config.max_outer == 1000


def test_rotation_is_projected_into_set():
    sc = parse(BASE)
    far = sc.space.point([5.0, 0.0])
    assert sc.K.contains(sc.T(far))


def test_unknown_key_line():
    text = BASE.replace("map: {", "map: {colour: red, ")
    with pytest.raises(ConfigError, match=r"^line 4: unknown key 'colour'"):
        parse(text)


def test_missing_required():
    with pytest.raises(ConfigError, match="missing required key 'map'"):
        parse("schema_version: 1\nspace: {type: hyperbolic}\n")


def test_schema_version():
    with pytest.raises(ConfigError, match="^line 1: unsupported schema_version"):
        parse(BASE.replace("schema_version: 1", "schema_version: 2"))


def test_malformed_yaml_line():
    with pytest.raises(ConfigError, match=r"^line \d+: malformed YAML"):
        parse(BASE + "solver: [unclosed\n")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="^line 5: duplicate key 'seed'"):
        parse("schema_version: 1\nseed: 1\nspace: {type: hyperbolic}\nmap: {type: identity}\nseed: 2\n")


def test_bad_number():
    with pytest.raises(ConfigError, match="^line 3: radius must be a number"):
        parse(BASE.replace("radius: 2.0", "radius: big"))


def test_point_dimension():
    with pytest.raises(ConfigError, match="point must be a list of 2 numbers"):
        parse(BASE.replace("center: [0.0, 0.0]", "center: [0.0]"))


def test_anchor_must_be_in_set():
    with pytest.raises(ConfigError, match="anchor must lie in the set"):
        parse(BASE + "solver: {anchor: [9.0, 0.0]}\n")


def test_ray_shift_needs_ray():
    with pytest.raises(ConfigError, match="ray_shift needs"):
        parse(BASE.replace("map: {type: rotation, center: [0.3, 0.2], angle: 1.0}", "map: {type: ray_shift}"))


def test_tree_inline_and_errors(tmp_path):
    sc = parse("""\
        schema_version: 1
        space:
          type: tree
          edges: |
            edge c a 1
            edge c b 1
        map: {type: branch_shift, permutation: {a: b, b: a}}
        """)
    assert isinstance(sc.space, sp.TreeSpace)
    a = sc.space.tree.point(node="a")
    assert sc.T(a) == sc.space.tree.point(node="b")
    with pytest.raises(ConfigError, match="tree: line 2"):
        parse("""\
            schema_version: 1
            space: {type: tree, edges: "edge c a 1\\nedge c a 2\\n"}
            map: {type: identity}
            """)
    (tmp_path / "t.tree").write_text("edge r s 2\n")
    sc = parse_scenario("schema_version: 1\nspace: {type: tree, file: t.tree}\nmap: {type: identity}\n", tmp_path)
    assert sc.space.tree.total_length == 2.0


def test_translation_plane():
    sc = parse("""\
        schema_version: 1
        space: {type: plane}
        map: {type: translation, from: [0, 0], to: [1, 0], shift: 0.5}
        """)
    np.testing.assert_allclose(sc.T(np.zeros(2)), [0.5, 0.0])


def test_intersection():
    sc = parse("""\
        schema_version: 1
        space: {type: hyperbolic}
        set:
          type: intersection
          parts:
            - {type: ball, center: [0, 0], radius: 2}
            - {type: ball, center: [1, 0], radius: 2}
        map: {type: identity}
        """)
    assert isinstance(sc.K, sp.Intersection)


def test_verify_config(tmp_path):
    f = tmp_path / "v.yaml"
    f.write_text("schema_version: 1\nseed: 4\ncat: {samples: 100, space: tree}\nlemma32: {h_max: 40}\n")
    cfg = load_verify_config(f)
    assert cfg == {"seed": 4, "cat": {"samples": 100, "space": "tree"}, "lemma32": {"h_max": 40.0}}
    f.write_text("schema_version: 1\nlemma99: {}\n")
    with pytest.raises(ConfigError, match="^line 2: unknown key 'lemma99'"):
        load_verify_config(f)
