"""SVG rendering: heatmap fidelity, panel counts, curve output, determinism."""

import re

import numpy as np
import pytest

from schoolsim.dynamics import SwarmState
from schoolsim.experiment import SweepPoint, builtin_config
from schoolsim.geometry import Arena, AxisRect, Vec2
from schoolsim.plots import (MARGIN_PX, MAX_HEATMAP_CELLS, RAMP, WorldTransform,
                             pick_instants, ramp_color, render_heatmap,
                             render_success_curve, render_trajectories,
                             write_svg)

HM_RE = re.compile(r'<rect x="([-\d.]+)" y="([-\d.]+)" width="([\d.]+)" '
                   r'height="([\d.]+)" fill="#([0-9a-f]{6})" class="hm"/>')


def rgb_sum(hexcode: str) -> int:
    return sum(int(hexcode[k:k + 2], 16) for k in (0, 2, 4))


# ----------------------------------------------------------------------- ramp

def test_ramp_anchor_sums_strictly_increase():
    sums = [sum(c) for c in RAMP]
    assert all(a < b for a, b in zip(sums, sums[1:]))


def test_ramp_is_monotone_and_clamped():
    ts = np.linspace(0, 1, 101)
    sums = [rgb_sum(ramp_color(t)[1:]) for t in ts]
    assert all(a <= b for a, b in zip(sums, sums[1:]))
    assert sums[0] < sums[-1]
    assert ramp_color(-3) == ramp_color(0.0)
    assert ramp_color(7) == ramp_color(1.0)


# -------------------------------------------------------------------- heatmap

def test_heatmap_brightest_block_sits_on_the_food(field_config1_left):
    f = field_config1_left
    svg = render_heatmap(f)
    blocks = HM_RE.findall(svg)
    assert blocks, "no heatmap cells emitted"
    scale = (840 - 2 * MARGIN_PX) / (f.nx * f.spacing)
    ox, oy = f.origin
    top = oy + f.ny * f.spacing
    best = max(blocks, key=lambda b: rgb_sum(b[4]))
    x, y, w, h = (float(v) for v in best[:4])
    cx = ox + (x - MARGIN_PX + w / 2) / scale
    cy = top - (y - MARGIN_PX + h / 2) / scale
    assert np.hypot(cx - 1.5, cy - 0.1) <= 0.1


def test_heatmap_block_budget(field_config1_left, field_config2):
    # 350x200 cells coarsen 2x into 175x100 blocks
    svg = render_heatmap(field_config1_left)
    assert len(HM_RE.findall(svg)) == 175 * 100
    assert svg.count('class="solid"') == 0
    # 200x200 fits the budget exactly; the baffle blanks 25x75 cells
    svg = render_heatmap(field_config2)
    assert len(HM_RE.findall(svg)) + svg.count('class="solid"') == MAX_HEATMAP_CELLS
    assert svg.count('class="solid"') == 25 * 75


def test_heatmap_marks_obstacles_and_food(field_config2):
    svg = render_heatmap(field_config2)
    assert svg.count('class="obstacle"') == 1
    assert svg.count('class="food"') == 1


def test_heatmap_is_deterministic(field_config2):
    assert render_heatmap(field_config2) == render_heatmap(field_config2)


# ------------------------------------------------------------------- instants

def test_pick_instants_even_spacing():
    times = [0.0, 0.5, 1.0, 1.5, 2.0]
    assert pick_instants(times) == [0, 1, 3, 4]
    assert pick_instants(times, count=2) == [0, 4]


def test_pick_instants_nearest_requested():
    times = [0.0, 0.5, 1.0, 1.5, 2.0]
    assert pick_instants(times, requested=[0.74, -5.0, 99.0]) == [1, 0, 4]
    # exact ties resolve to the earlier sample
    assert pick_instants(times, requested=[0.75]) == [1]


# ----------------------------------------------------------------- trajectory

def make_samples(n_states=6, n_fish=3):
    rng = np.random.default_rng(2)
    out = []
    for k in range(n_states):
        pos = np.column_stack([rng.uniform(0.5, 3.5, n_fish),
                               rng.uniform(0.5, 3.5, n_fish)])
        out.append(SwarmState(0.2 * k, pos, np.zeros_like(pos)))
    return out


def test_trajectory_panels_and_glyph_counts():
    cfg = builtin_config("config2")
    svg = render_trajectories(make_samples(), arena=cfg.arena,
                              food_center=cfg.food.center)
    assert svg.count('class="panel"') == 4
    assert svg.count('class="particle"') == 4 * 3
    assert svg.count('class="food"') == 4
    assert svg.count('class="obstacle"') == 4  # baffle drawn in each panel
    assert svg.count("<text") == 4  # one time label per panel


def test_trajectory_explicit_instants():
    svg = render_trajectories(make_samples(), instants=[0.0, 1.0])
    assert svg.count('class="panel"') == 2
    assert "t = 0</text>" in svg and "t = 1</text>" in svg


def test_trajectory_without_arena_uses_bounding_box():
    svg = render_trajectories(make_samples())
    assert svg.count('class="panel"') == 4
    assert svg.count('class="obstacle"') == 0


def test_trajectory_requires_samples():
    with pytest.raises(ValueError):
        render_trajectories([])


def test_trajectory_is_deterministic():
    a = render_trajectories(make_samples())
    b = render_trajectories(make_samples())
    assert a == b


# -------------------------------------------------------------- success curve

def test_success_curve_points_and_line():
    pts = [SweepPoint(n, 10, 10 - s, 0, s) for n, s in
           ((2, 3), (5, 9), (10, 7), (20, 4))]
    svg = render_success_curve(pts)
    assert svg.count('class="prob-point"') == 4
    assert svg.count('class="curve"') == 1
    assert svg.count("<line") == 3  # gridlines at 0.25 / 0.5 / 0.75
    assert "school size" in svg and "success probability" in svg


def test_success_curve_single_point_has_no_line():
    svg = render_success_curve([SweepPoint(5, 4, 1, 0, 3)])
    assert svg.count('class="prob-point"') == 1
    assert svg.count('class="curve"') == 0


def test_success_curve_empty_warns_and_returns_none():
    with pytest.warns(UserWarning):
        assert render_success_curve([]) is None


# ---------------------------------------------------------------------- files

def test_write_svg_refuses_overwrite(tmp_path):
    target = tmp_path / "x.svg"
    write_svg("<svg/>", target)
    assert target.read_text() == "<svg/>"
    with pytest.raises(FileExistsError):
        write_svg("<svg>2</svg>", target)
    write_svg("<svg>2</svg>", target, force=True)
    assert target.read_text() == "<svg>2</svg>"


def test_world_transform_flips_y():
    tf = WorldTransform(AxisRect(Vec2(0, 0), Vec2(4, 4)), px_width=400)
    x0, y0 = tf.to_px(0, 0)
    x1, y1 = tf.to_px(4, 4)
    assert x0 < x1 and y0 > y1  # world up is pixel up
    assert x0 == MARGIN_PX and y1 == MARGIN_PX
