from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avmask.errors import ParameterError
from avmask.hiding import HidingParams
from avmask.manager.planner import DEFAULT_CORE_SIZE, auto_overlap, plan_chunks


def test_worked_example_100_frames_core_40_overlap_4():
    plans = plan_chunks(100, core_size=40, overlap=4)
    assert [(p.core_start, p.core_end) for p in plans] == [(0, 40), (40, 80), (80, 100)]
    assert [(p.input_start, p.input_end) for p in plans] == [(0, 44), (36, 84), (76, 100)]


def test_single_chunk_video():
    plans = plan_chunks(10, core_size=40, overlap=4)
    assert len(plans) == 1
    assert (plans[0].core_start, plans[0].core_end) == (0, 10)
    assert (plans[0].input_start, plans[0].input_end) == (0, 10)


def test_zero_frames_yields_no_chunks():
    assert plan_chunks(0, core_size=40) == []


def test_default_core_size():
    plans = plan_chunks(600)
    assert DEFAULT_CORE_SIZE == 250
    assert [(p.core_start, p.core_end) for p in plans] == [(0, 250), (250, 500), (500, 600)]


def test_core_size_property():
    plans = plan_chunks(100, core_size=40, overlap=4)
    assert [p.core_size for p in plans] == [40, 40, 20]


def test_parameter_validation():
    with pytest.raises(ParameterError):
        plan_chunks(100, core_size=0)
    with pytest.raises(ParameterError):
        plan_chunks(100, core_size=10, overlap=-1)
    with pytest.raises(ParameterError):
        plan_chunks(-1, core_size=10)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2000), st.integers(1, 300), st.integers(0, 20))
def test_cores_partition_the_video(frame_count, core_size, overlap):
    plans = plan_chunks(frame_count, core_size=core_size, overlap=overlap)
    # cores tile [0, frame_count) without gaps or overlap
    cursor = 0
    for p in plans:
        assert p.core_start == cursor
        assert p.core_end > p.core_start
        cursor = p.core_end
        # inputs pad cores by exactly overlap, clamped at the video edges
        assert p.input_start == max(0, p.core_start - overlap)
        assert p.input_end == min(frame_count, p.core_end + overlap)
        assert p.core_end - p.core_start <= core_size
    assert cursor == frame_count
    # every chunk except the last is full size
    for p in plans[:-1]:
        assert p.core_size == core_size


def test_auto_overlap_for_temporal_kernels():
    assert auto_overlap(HidingParams(strategy="inpaint_median", median_window=5)) == 4
    assert auto_overlap(HidingParams(strategy="inpaint_median", median_window=9)) == 8
    assert auto_overlap(HidingParams(strategy="blur")) == 0
    assert auto_overlap(HidingParams(strategy="blackout")) == 0
    assert auto_overlap(HidingParams(strategy="none")) == 0
