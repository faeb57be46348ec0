import copy

import pytest

from gridmc.cells import parse_cell
from gridmc.distributions import Triangular, Uniform
from gridmc.document import DocumentError, ModelDocument, validate_schema
from gridmc.model import evaluate
from gridmc.simulate import run


def C(text):
    return parse_cell(text)


def minimal_doc():
    return {
        "name": "mini",
        "cells": [
            {"address": "A1", "label": "x", "formula": 0.5},
            {"address": "A2", "label": "y", "formula": 0.5},
            {"address": "A3", "label": "out", "formula": "=3*A1-2*A2"},
        ],
        "assumptions": [
            {"cell": "x", "distribution": {"type": "uniform", "min": 0, "max": 1}},
            {"cell": "A2", "distribution": {"type": "triangular", "min": 0,
                                            "mode": 0.5, "max": 1}},
        ],
        "forecasts": [{"cell": "A3", "label": "f", "target": {"lo": 0}}],
        "expectations": [{"assumption": "x", "forecast": "f", "sign": "+"}],
        "limits": [{"cell": "A3", "min": -2}],
        "expected_intervals": [{"forecast": "f", "lo": -2, "hi": 3}],
        "correlations": [{"a": "x", "b": "y", "rho": 0.5}],
        "run": {"trials": 200, "seed": 7},
    }


class TestSchema:
    def test_minimal_accepted(self):
        validate_schema(minimal_doc())

    def test_examples_accepted(self, project_doc, correlated_doc, sqrt_trap_doc):
        for doc in (project_doc, correlated_doc, sqrt_trap_doc):
            validate_schema(doc.data)

    def test_missing_required_key(self):
        data = minimal_doc()
        del data["cells"]
        with pytest.raises(DocumentError, match="cells"):
            validate_schema(data)

    def test_unknown_top_level_key_rejected(self):
        data = minimal_doc()
        data["bogus"] = 1
        with pytest.raises(DocumentError):
            validate_schema(data)

    def test_bad_sign_rejected(self):
        data = minimal_doc()
        data["expectations"][0]["sign"] = "positive"
        with pytest.raises(DocumentError):
            validate_schema(data)

    def test_all_diagnostics_collected(self):
        data = minimal_doc()
        del data["name"]
        data["run"]["trials"] = 0
        with pytest.raises(DocumentError) as exc:
            validate_schema(data)
        assert len(exc.value.diagnostics) >= 2

    def test_rho_out_of_range_rejected(self):
        data = minimal_doc()
        data["correlations"][0]["rho"] = 1.5
        with pytest.raises(DocumentError):
            validate_schema(data)


class TestBuild:
    def test_declarations_translate(self):
        doc = ModelDocument.from_json(minimal_doc())
        model, spec = doc.build()
        assert spec.trials == 200 and spec.seed == 7
        assert spec.assumption_cells == [C("A1"), C("A2")]
        assert spec.distributions == [Uniform(0, 1), Triangular(0, 0.5, 1)]
        assert spec.forecasts[0].cell == C("A3")
        assert spec.forecasts[0].target_lo == 0
        assert spec.expectations[0].sign == 1
        assert spec.limits[0].min == -2
        assert spec.expected_intervals[0].lo == -2
        assert spec.correlation.as_array()[0, 1] == 0.5
        assert model.label_of(C("A3")) == "out"

    def test_overrides_beat_run_block(self):
        doc = ModelDocument.from_json(minimal_doc())
        _, spec = doc.build(trials=11, seed=99)
        assert spec.trials == 11 and spec.seed == 99

    def test_expectation_resolves_forecast_label(self):
        # "f" is a forecast label, not a cell label
        doc = ModelDocument.from_json(minimal_doc())
        _, spec = doc.build()
        assert spec.expectations[0].forecast == C("A3")

    def test_unknown_assumption_cell(self):
        data = minimal_doc()
        data["assumptions"][0]["cell"] = "nope"
        with pytest.raises(DocumentError, match="nope"):
            ModelDocument.from_json(data).build()

    def test_correlation_must_name_assumptions(self):
        data = minimal_doc()
        data["correlations"][0]["a"] = "out"
        with pytest.raises(DocumentError, match="non-assumption"):
            ModelDocument.from_json(data).build()

    def test_all_build_diagnostics_collected(self):
        data = minimal_doc()
        data["assumptions"][0]["cell"] = "ghost1"
        data["limits"][0]["cell"] = "ghost2"
        with pytest.raises(DocumentError) as exc:
            ModelDocument.from_json(data).build()
        joined = "; ".join(exc.value.diagnostics)
        assert "ghost1" in joined and "ghost2" in joined

    def test_project_fixture_builds(self, project_doc):
        model, spec = project_doc.build()
        assert len(spec.assumptions) == 4
        assert spec.forecasts[0].label == "ProjectNPV"
        assert len(spec.limits) == 5
        assert len(spec.expectations) == 4


class TestBakeScenario:
    def test_bakes_constants_and_drops_sampling(self):
        doc = ModelDocument.from_json(minimal_doc())
        model, spec = doc.build()
        baked = doc.bake_scenario(spec, [0.25, 0.75], 9)
        assert baked["name"] == "mini.scenario9"
        cells = {c["address"]: c["formula"] for c in baked["cells"]}
        assert cells["A1"] == 0.25 and cells["A2"] == 0.75
        assert cells["A3"] == "=3*A1-2*A2"
        for gone in ("assumptions", "correlations", "expectations"):
            assert gone not in baked
        validate_schema(baked)  # still a valid document

    def test_baked_document_replays_value(self):
        doc = ModelDocument.from_json(minimal_doc())
        model, spec = doc.build()
        store = run(model, spec)
        t = 3
        baked = ModelDocument.from_json(
            doc.bake_scenario(spec, store.assumption_matrix[t], t))
        baked_model = baked.build_model()
        result = evaluate(baked_model)
        assert result[C("A3")] == store.forecast_matrix[t, 0]

    def test_original_untouched(self):
        doc = ModelDocument.from_json(minimal_doc())
        snapshot = copy.deepcopy(doc.data)
        _, spec = doc.build()
        doc.bake_scenario(spec, [0.1, 0.2], 0)
        assert doc.data == snapshot
