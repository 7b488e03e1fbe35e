import math
import os

import numpy as np
import pytest

from phnmf.ingest import (
    ColumnSpec,
    SchemaError,
    SurveySchema,
    assemble,
    consolidate_satisfaction,
    encode_survey,
    export_survey,
    indicator_encode,
    load_csv,
    text_topic_features,
    tfidf,
)
from phnmf.linalg import ValidationError, load_matrix_csv, save_matrix_csv
from phnmf.nmf import NmfConfig

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
TOY_CSV = os.path.join(DATA_DIR, "toy_survey.csv")
TOY_SCHEMA = os.path.join(DATA_DIR, "toy_schema.json")


def toy_schema():
    return SurveySchema.from_json(TOY_SCHEMA)


class TestLoadCsv:
    def test_toy_file(self):
        cols = load_csv(TOY_CSV, toy_schema())
        assert len(cols["overall_satisfaction"]) == 20
        assert cols["visits"][0] == 4.0
        assert cols["comments"][12] is None  # r13 left the box empty

    def test_three_row_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,x\n2,y\n3,z\n")
        schema = SurveySchema([ColumnSpec("a", "ordinal"), ColumnSpec("b", "demographic")])
        cols = load_csv(path, schema)
        assert cols["a"] == [1.0, 2.0, 3.0]
        assert cols["b"] == ["x", "y", "z"]

    def test_missing_header_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a\n1\n")
        schema = SurveySchema([ColumnSpec("a", "ordinal"), ColumnSpec("b", "demographic")])
        with pytest.raises(SchemaError, match="missing"):
            load_csv(path, schema)

    def test_unknown_header_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,zz\n1,2\n")
        schema = SurveySchema([ColumnSpec("a", "ordinal")])
        with pytest.raises(SchemaError, match="unknown"):
            load_csv(path, schema)

    def test_quoted_comma_field(self):
        cols = load_csv(TOY_CSV, toy_schema())
        assert cols["comments"][16] == "trees, parks, and green fields"

    def test_bad_row_length(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,x,extra\n")
        schema = SurveySchema([ColumnSpec("a", "ordinal"), ColumnSpec("b", "demographic")])
        with pytest.raises(SchemaError, match="row 2"):
            load_csv(path, schema)

    def test_unparseable_ordinal(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a\nnot-a-number\n")
        schema = SurveySchema([ColumnSpec("a", "ordinal")])
        with pytest.raises(SchemaError, match="row 2"):
            load_csv(path, schema)


class TestConsolidation:
    def test_default_mapping(self):
        out = consolidate_satisfaction(
            ["Very Satisfied", "Satisfied", "Neutral", "Don't Know",
             "Dissatisfied", "Very Dissatisfied", None]
        )
        assert out == ["pos", "pos", "neutral", "neutral", "neg", "neg", "neutral"]

    def test_unmapped_choice_listed(self):
        with pytest.raises(SchemaError, match="Meh"):
            consolidate_satisfaction(["Meh", "Satisfied"])

    def test_custom_mapping(self):
        out = consolidate_satisfaction(
            ["Agree", "Disagree"], {"Agree": "pos", "Disagree": "neg"}
        )
        assert out == ["pos", "neg"]

    def test_bad_mapping_target(self):
        with pytest.raises(SchemaError):
            consolidate_satisfaction(["Yes"], {"Yes": "positive-ish"})


class TestIndicatorEncode:
    def test_values(self):
        out = indicator_encode(["pos", "neutral", "neg"])
        assert out.tolist() == [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]

    def test_two_columns_row_sums(self):
        out = indicator_encode(["pos"] * 3 + ["neg"] * 2 + ["neutral"] * 4)
        assert out.shape == (9, 2)
        assert np.all(out.sum(axis=1) <= 1.0)

    def test_rejects_garbage(self):
        with pytest.raises(ValidationError):
            indicator_encode(["positive"])


class TestTfidf:
    def test_hand_computed_oracle(self):
        # N=2; df(a)=2 -> idf 1; df(b)=1 -> idf ln(3/2)+1; rows L2-normalized
        mat, vocab = tfidf(["a b", "a"], min_df=1)
        assert vocab == ["a", "b"]
        idf_b = math.log(3.0 / 2.0) + 1.0
        row0 = np.array([1.0, idf_b])
        row0 /= np.linalg.norm(row0)
        assert np.allclose(mat[0], row0, atol=1e-12)
        assert np.allclose(mat[1], [1.0, 0.0], atol=1e-12)

    def test_empty_document_stays_zero(self):
        mat, _ = tfidf(["a b", "", "a"], min_df=1)
        assert np.array_equal(mat[1], np.zeros(mat.shape[1]))

    def test_duplicate_documents_identical_rows(self):
        mat, _ = tfidf(["x y z", "x y z", "x"], min_df=1)
        assert np.array_equal(mat[0], mat[1])

    def test_min_df_filters(self):
        _, vocab = tfidf(["rare common", "common"], min_df=2)
        assert vocab == ["common"]

    def test_empty_vocabulary_error(self):
        with pytest.raises(ValidationError, match="at least 2"):
            tfidf(["one", "two"], min_df=2)

    def test_nonzero_rows_unit_norm(self):
        mat, _ = tfidf(["a b c", "a c", "b b"], min_df=1)
        norms = np.linalg.norm(mat, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-12)


class TestTextTopicFeatures:
    def test_column_max_is_one(self):
        mat, _ = tfidf(["a b", "a", "c d", "c"], min_df=1)
        feats = text_topic_features(mat, 2, NmfConfig(rank=2, seed=0))
        for col in range(2):
            assert feats[:, col].max() == pytest.approx(1.0)

    def test_disjoint_groups_separate(self):
        docs = ["parks trees green"] * 5 + ["bus route late"] * 5
        mat, _ = tfidf(docs, min_df=2)
        feats = text_topic_features(mat, 2, NmfConfig(rank=2, seed=1))
        lead = np.argmax(feats, axis=1)
        assert len(set(lead[:5])) == 1
        assert len(set(lead[5:])) == 1
        assert lead[0] != lead[5]

    def test_rank_one(self):
        mat, _ = tfidf(["a b", "a", "b"], min_df=1)
        feats = text_topic_features(mat, 1, NmfConfig(rank=1, seed=2))
        assert feats.shape == (3, 1)
        assert feats.max() == pytest.approx(1.0)

    def test_row_scaling_flag(self):
        mat, _ = tfidf(["a b", "a", "c d", "c"], min_df=1)
        feats = text_topic_features(mat, 2, NmfConfig(rank=2, seed=0), scale_rows=True)
        assert np.allclose(feats.max(axis=1), 1.0)


class TestAssemble:
    def test_widths_concatenate(self):
        parts = [(["a", "b", "c"], np.ones((4, 3))), (["d", "e"], np.zeros((4, 2)))]
        survey = assemble(parts)
        assert survey.X.shape == (4, 5)
        assert survey.feature_names == ["a", "b", "c", "d", "e"]

    def test_row_count_mismatch(self):
        with pytest.raises(ValidationError, match="mismatch"):
            assemble([(["a"], np.ones((4, 1))), (["b"], np.ones((5, 1)))])

    def test_demographics_on_the_side(self):
        survey = assemble(
            [(["a"], np.ones((3, 1)))], demographics={"age": ["x", "y", "z"]}
        )
        assert "age" not in survey.feature_names
        assert survey.demographics["age"] == ["x", "y", "z"]


class TestEncodeSurvey:
    def test_toy_end_to_end(self):
        schema = toy_schema()
        cols = load_csv(TOY_CSV, schema)
        survey = encode_survey(cols, schema, seed=3)
        # 2 satisfaction indicators + 3 choice indicators + 2 topics + 1 ordinal
        assert survey.X.shape == (20, 8)
        assert survey.feature_names == [
            "overall_satisfaction_pos", "overall_satisfaction_neg",
            "feels_safe=Yes", "feels_safe=No", "feels_safe=Don't Know",
            "comments_topic1", "comments_topic2", "visits",
        ]
        assert np.all(survey.X >= 0.0)
        assert list(survey.demographics) == ["age_band"]
        # r01 was Very Satisfied and Yes
        assert survey.X[0, 0] == 1.0 and survey.X[0, 1] == 0.0
        assert survey.X[0, 2] == 1.0

    def test_feature_lookup_by_name(self):
        schema = toy_schema()
        cols = load_csv(TOY_CSV, schema)
        survey = encode_survey(cols, schema, seed=3)
        visits = survey.X[:, survey.feature_names.index("visits")]
        assert visits[0] == 4.0 and visits[13] == 9.0

    def test_undeclared_choice_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("q\nMaybe\n")
        schema = SurveySchema([ColumnSpec("q", "categorical", choices=["Yes", "No"])])
        cols = load_csv(path, schema)
        with pytest.raises(SchemaError, match="Maybe"):
            encode_survey(cols, schema)

    def test_order_stability_without_text(self, tmp_path):
        schema = SurveySchema([
            ColumnSpec("sat", "satisfaction"),
            ColumnSpec("n", "ordinal"),
        ])
        rows = [("Very Satisfied", 1.0), ("Dissatisfied", 2.0), ("Neutral", 3.0),
                ("Satisfied", 4.0)]
        cols = {"sat": [r[0] for r in rows], "n": [r[1] for r in rows]}
        base = encode_survey(cols, schema).X
        perm = [2, 0, 3, 1]
        shuffled = {"sat": [rows[i][0] for i in perm], "n": [rows[i][1] for i in perm]}
        out = encode_survey(shuffled, schema).X
        assert np.array_equal(out, base[perm])

    def test_negative_ordinal_rejected(self):
        schema = SurveySchema([ColumnSpec("n", "ordinal")])
        with pytest.raises(ValidationError):
            encode_survey({"n": [-1.0]}, schema)


class TestExportSurvey:
    def test_roundtrip_bitwise(self, tmp_path):
        schema = toy_schema()
        cols = load_csv(TOY_CSV, schema)
        survey = encode_survey(cols, schema, seed=3)
        out = tmp_path / "enc"
        export_survey(survey, out)
        back = load_matrix_csv(out / "X.csv")
        assert np.array_equal(back, survey.X)
        save_matrix_csv(back, tmp_path / "again.csv")
        assert (out / "X.csv").read_bytes() == (tmp_path / "again.csv").read_bytes()
        names = (out / "feature_names.txt").read_text().splitlines()
        assert names == survey.feature_names
        demo = (out / "demographics.csv").read_text().splitlines()
        assert demo[0] == "row_id,age_band"
        assert len(demo) == 21


class TestSchema:
    def test_duplicate_names_rejected(self):
        with pytest.raises(SchemaError):
            SurveySchema([ColumnSpec("a", "ordinal"), ColumnSpec("a", "drop")])

    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaError):
            ColumnSpec("a", "mystery")

    def test_categorical_needs_choices(self):
        with pytest.raises(SchemaError):
            ColumnSpec("a", "categorical")
