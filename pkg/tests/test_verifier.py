import json

import numpy as np
import pytest

from qsslab.schemes import DEALER, SchemeSpec, build_block_scheme, identity_assignment
from qsslab.structures import AccessStructure, StructureError, threshold_structure
from qsslab.verifier import (
    GeneralizedChecker,
    ResourceLimitError,
    StructuralMismatchError,
    SubsetEntropyTable,
    check_entropy_balance,
    matrix_to_dict,
    report_hash,
    report_to_dict,
    verify,
)
from qsslab.schemes import distribute_purified


# ---------------------------------------------------------------------------
# full verification of the four-share threshold scheme


@pytest.fixture(scope="module")
def report(threshold34_scheme, threshold34_gamma):
    return verify(threshold34_scheme, threshold34_gamma)


class TestVerifyThreshold34:
    def test_headline_numbers(self, report):
        assert report.i_rs == pytest.approx(2.0, abs=1e-9)
        assert report.s_s == pytest.approx(1.0, abs=1e-9)
        assert report.verdict == "generalized"

    def test_profile_by_subset_size(self, report):
        for r in report.records:
            size = len(r.subset)
            if size >= 3:
                assert r.classification == "authorized"
                assert r.i_ra == pytest.approx(2.0, abs=1e-9)
            elif size == 2:
                assert r.classification == "A2"
                assert r.i_ra == pytest.approx(1.0, abs=1e-9)
            else:
                assert r.classification == "A1"
                assert r.i_ra == pytest.approx(0.0, abs=1e-9)
            assert r.condition_pass

    def test_report_complete(self, report):
        assert len(report.records) == 15
        assert sorted(r.subset.bits for r in report.records) == list(range(1, 16))

    def test_perfect_model_fails_on_a_pair(self, threshold34_scheme, threshold34_gamma):
        report = verify(threshold34_scheme, threshold34_gamma, model="perfect")
        assert report.verdict == "generalized"
        assert not report.meets_requested
        assert report.requested_witness is not None
        assert len(report.requested_witness) == 2

    def test_balance(self, report):
        assert report.entropy_balanced
        assert report.worst_balance_deviation <= 1e-9

    def test_unauthorized_complement_identity(self, report):
        by_bits = {r.subset.bits: r for r in report.records}
        for r in report.records:
            comp = r.subset.complement().bits
            if comp == 0:
                continue
            assert r.i_ra + by_bits[comp].i_ra == pytest.approx(2.0, abs=1e-9)


class TestVerifyBlockScheme:
    def test_five_share_profile(self):
        scheme, gamma = build_block_scheme(5, [1, 2])
        report = verify(scheme, gamma)
        assert report.verdict == "generalized"
        assert report.i_rs == pytest.approx(2.0, abs=1e-9)
        assert report.s_s == pytest.approx(1.0, abs=1e-9)
        for r in report.records:
            if r.classification == "authorized":
                assert r.i_ra == pytest.approx(2.0, abs=1e-9)
            elif r.classification == "A1":
                assert r.i_ra == pytest.approx(0.0, abs=1e-9)
            else:
                assert r.i_ra == pytest.approx(1.0, abs=1e-9)

    def test_named_sets(self):
        scheme, gamma = build_block_scheme(5, [1, 2])
        report = verify(scheme, gamma)
        assert report.record_for([1, 2, 3]).i_ra == pytest.approx(2.0, abs=1e-9)
        assert report.record_for([1, 3, 4, 5]).i_ra == pytest.approx(2.0, abs=1e-9)
        assert report.record_for([3]).classification == "A1"
        assert report.record_for([1, 2]).classification == "A2"


class TestVerifyFailures:
    def test_corrupted_scheme_fails_with_witness(self, corrupted_scheme, threshold34_gamma):
        report = verify(corrupted_scheme, threshold34_gamma)
        assert report.verdict == "fail"
        assert report.witness is not None
        failing = [r for r in report.records if not r.condition_pass]
        assert failing
        assert report.witness == failing[0].subset
        # the breakage shows as an authorized triple short of full correlation
        triple = report.record_for([1, 2, 3])
        assert triple.i_ra == pytest.approx(1.5, abs=1e-9)
        assert not triple.condition_pass

    def test_mismatch_when_structure_understates(self, threshold34_scheme):
        claimed = AccessStructure.from_sets(4, [[1, 2, 3, 4]])
        with pytest.raises(StructuralMismatchError) as err:
            verify(threshold34_scheme, claimed)
        assert len(err.value.witness) == 3

    def test_player_count_mismatch(self, threshold34_scheme):
        with pytest.raises(StructureError, match="players"):
            verify(threshold34_scheme, threshold_structure(2, 3))

    def test_unknown_model(self, threshold34_scheme, threshold34_gamma):
        with pytest.raises(ValueError, match="model"):
            verify(threshold34_scheme, threshold34_gamma, model="strict")

    def test_resource_limit(self):
        images = np.zeros((2, 1 << 14), dtype=np.complex128)
        images[0, 0] = images[1, 1] = 1.0
        big = SchemeSpec(14, images, identity_assignment(14))
        with pytest.raises(ResourceLimitError):
            verify(big, AccessStructure.from_sets(14, [[i] for i in range(1, 15)]))


class TestEntropyBalance:
    def test_threshold34_balanced(self, threshold34_scheme, threshold34_gamma):
        result = check_entropy_balance(threshold34_scheme, threshold34_gamma)
        assert result.balanced
        assert result.worst_deviation <= 1e-9
        assert result.generalized_ok and result.agrees_with_verify

    def test_block_scheme_balanced(self):
        scheme, gamma = build_block_scheme(5, [1, 2])
        result = check_entropy_balance(scheme, gamma)
        assert result.balanced and result.agrees_with_verify

    def test_corrupted_scheme_unbalanced(self, corrupted_scheme, threshold34_gamma):
        result = check_entropy_balance(corrupted_scheme, threshold34_gamma)
        assert not result.balanced
        assert result.worst_deviation == pytest.approx(0.5, abs=1e-9)
        assert not result.generalized_ok
        assert result.agrees_with_verify


class TestEntropyProfile:
    def test_biased_secret_scaling(self, threshold34_scheme, threshold34_gamma):
        from qsslab.verifier import entropy_profile

        p = 0.3
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
        profile = entropy_profile(threshold34_scheme, (p, 1 - p))
        assert len(profile) == 15
        for subset, _, _, i_ra in profile:
            if threshold34_gamma.contains(subset):
                expected = 2 * h  # recoverable sets keep the full correlation
            elif len(subset) == 2:
                expected = h  # unavoidable sets hold exactly the secret entropy
            else:
                expected = 0.0
            assert i_ra == pytest.approx(expected, abs=1e-9), str(subset)


class TestEntropyTable:
    def test_lookup_matches_direct_computation(self, threshold34_scheme):
        from qsslab.qstate import subsystem_entropy

        state = distribute_purified(threshold34_scheme)
        table = SubsetEntropyTable(state, 4)
        assert table.s(0b0011) == pytest.approx(
            subsystem_entropy(state, ("p1", "p2")), abs=1e-12
        )
        assert table.s_with_ref(0b0011) == pytest.approx(
            subsystem_entropy(state, ("R", "p1", "p2")), abs=1e-12
        )
        assert table.i_ref(0b0111) == pytest.approx(2.0, abs=1e-9)

    def test_generalized_checker_accepts_identity(self, threshold34_scheme, threshold34_gamma):
        checker = GeneralizedChecker(threshold34_scheme, threshold34_gamma)
        assert checker.passes([0b0001, 0b0010, 0b0100, 0b1000])

    def test_generalized_checker_rejects_bad_grouping(self, threshold34_scheme):
        # claiming the star while the state realizes the threshold
        star = AccessStructure.from_sets(4, [[1, 2], [1, 3], [1, 4]])
        checker = GeneralizedChecker(threshold34_scheme, star)
        assert not checker.passes([0b0001, 0b0010, 0b0100, 0b1000])


class TestReportSerialization:
    def test_document_shape(self, threshold34_scheme, threshold34_gamma):
        report = verify(threshold34_scheme, threshold34_gamma)
        doc = report_to_dict(report)
        assert doc["verdict"] == "generalized"
        assert doc["i_rs"] == pytest.approx(2.0)
        assert len(doc["records"]) == 15
        record = doc["records"][0]
        assert set(record) == {"subset", "class", "s_a", "s_ra", "i_ra", "pass"}
        json.dumps(doc)  # must be serializable

    def test_hash_stable(self, threshold34_scheme, threshold34_gamma):
        a = report_hash(verify(threshold34_scheme, threshold34_gamma))
        b = report_hash(verify(threshold34_scheme, threshold34_gamma))
        assert a == b and len(a) == 12


# ---------------------------------------------------------------------------
# feasibility matrix (computed once per session by the fixture)


class TestFeasibilityMatrix:
    def test_every_row_perfect_infeasible(self, feasibility_rows):
        assert len(feasibility_rows.rows) == 16
        for row in feasibility_rows.rows:
            assert not row.pqss_feasible, row.number
            assert row.pqss_witness is not None

    def test_gqss_verdicts(self, feasibility_rows):
        expected_unknown = {9, 10}
        for row in feasibility_rows.rows:
            if row.number in expected_unknown:
                assert row.gqss == "unknown", row.number
                assert row.assignment is None
            else:
                assert row.gqss == "verified", row.number
                assert row.assignment is not None
                assert row.report_hash is not None

    def test_documented_assignment_rows(self, feasibility_rows):
        rows = {row.number: row for row in feasibility_rows.rows}
        assert rows[7].assignment == {
            "P1": [2], "P2": [3], "P3": [4], "P4": [5], DEALER: [1]
        }
        assert rows[13].assignment == {
            "P1": [1, 4], "P2": [2], "P3": [3], "P4": [5], "P5": [6]
        }
        assert rows[14].assignment == {
            "P1": [1, 5], "P2": [2, 4], "P3": [3], "P4": [6], "P5": [7]
        }

    def test_row5_discrepancy_flagged(self, feasibility_rows):
        rows = {row.number: row for row in feasibility_rows.rows}
        assert any("rejected" in note for note in rows[5].notes)
        assert rows[5].gqss == "verified"

    def test_verified_assignments_revalidate(self, feasibility_rows):
        for row in feasibility_rows.rows:
            if row.gqss != "verified":
                continue
            name = row.scheme_name
            assert name is not None
            if name.startswith("star"):
                continue
            n = int(name.split("n=")[1].split(",")[0])
            block = [int(x) for x in name.split("b={")[1].split("}")[0].split(",")]
            base_scheme, base_gamma = build_block_scheme(n, block)
            assignment = {h: tuple(ps) for h, ps in row.assignment.items()}
            rebuilt = SchemeSpec(n, base_scheme.basis_images, assignment)
            report = verify(rebuilt, row.structure)
            assert report.verdict == "generalized", row.number

    def test_matrix_document(self, feasibility_rows):
        doc = matrix_to_dict(feasibility_rows)
        assert len(doc["rows"]) == 16
        json.dumps(doc)
