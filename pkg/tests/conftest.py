import numpy as np
import pytest

from partforge import mfgmodel as mm


@pytest.fixture
def aluminum():
    return mm.Material(name="Al6061", density=2700.0, youngs_modulus=68.9e9,
                       cost_per_kg=10.0, print_rate=0.08, millable=True,
                       conductive=True, print_process="lpbf")


@pytest.fixture
def titanium():
    return mm.Material(name="Ti6Al4V", density=4430.0, youngs_modulus=113.8e9,
                       cost_per_kg=60.0, print_rate=0.06, millable=True,
                       conductive=True, print_process="lpbf")


@pytest.fixture
def abs_plastic():
    return mm.Material(name="ABS", density=1050.0, youngs_modulus=2.3e9,
                       cost_per_kg=3.0, print_rate=0.02, millable=True,
                       conductive=False, print_process="fdm")


def make_additive_spec(orientation="y+"):
    return mm.MethodSpec(
        kind="additive", orientations=(orientation,),
        stage_times={"setup": 4.0, "support_removal": 2.0, "inspection": 1.0},
        stage_costs={"setup": 400.0, "support_removal": 150.0,
                     "inspection": 100.0},
        operation_cost_per_min=1.0)


def make_milling_spec(directions=("x+", "x-", "y+", "y-", "z+", "z-"),
                      removal_rate=0.002):
    return mm.MethodSpec(
        kind="mill3axis", orientations=tuple(directions),
        stage_times={"setup": 1.0, "fixture": 0.5, "polishing": 1.0,
                     "inspection": 1.0},
        stage_costs={"setup": 100.0, "fixture": 50.0, "polishing": 80.0,
                     "inspection": 100.0},
        operation_cost_per_min=2.0, removal_rate=removal_rate)


def make_cutting_spec(axis="y"):
    return mm.MethodSpec(
        kind="cut2axis", orientations=(axis,),
        stage_times={"setup": 1.0, "polishing": 0.5, "inspection": 1.0},
        stage_costs={"setup": 100.0, "polishing": 50.0, "inspection": 100.0},
        operation_cost_per_min=1.5,
        edm_feed_rate=40.0 / mm.SQ_IN_PER_SQ_M)


@pytest.fixture
def additive_spec():
    return make_additive_spec()


@pytest.fixture
def milling_spec():
    return make_milling_spec()


@pytest.fixture
def cutting_spec():
    return make_cutting_spec()
