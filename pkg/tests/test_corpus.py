import pytest

from autocc.corpus import (
    BadFlag,
    EncodingError,
    Flag,
    MissingColumn,
    load_corpus,
    scan_placeholders,
)

def test_load_sample_rows(sample_tsv):
    load = load_corpus(sample_tsv)
    assert len(load) == 3
    assert load.records[0].predict is Flag.N
    assert load.records[0].consensus is Flag.UNMARKED
    assert load.records[1].predict is Flag.Y
    assert load.records[1].consensus is Flag.N
    assert load.records[2].predict is Flag.Y
    assert load.records[2].consensus is Flag.Y
    assert [r.id for r in load.records] == [0, 1, 2]
    assert load.rows_read == 3
    assert load.rows_dropped == 0


def test_load_empty_file_with_header(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("Chief Complaint\tPredict\tConsensus\n", encoding="utf-8")
    load = load_corpus(path)
    assert load.records == []
    assert load.rows_read == 0


def test_load_csv_with_quoted_fields(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text(
        'chief complaint,predict,consensus\n"chest pain, worse at night",Y,U\n',
        encoding="utf-8",
    )
    load = load_corpus(path)
    assert load.records[0].text == "chest pain, worse at night"
    assert load.records[0].consensus is Flag.U


def test_missing_column(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("Chief Complaint\tPredict\nchest pain\tY\n", encoding="utf-8")
    with pytest.raises(MissingColumn):
        load_corpus(path)


def test_bad_flag(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("Chief Complaint\tPredict\tConsensus\nchest pain\tmaybe\t-\n", encoding="utf-8")
    with pytest.raises(BadFlag) as excinfo:
        load_corpus(path)
    assert excinfo.value.value == "maybe"
    assert excinfo.value.column == "predict"


def test_invalid_utf8(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_bytes(b"Chief Complaint\tPredict\tConsensus\n\xff\xfe oops\tY\tY\n")
    with pytest.raises(EncodingError):
        load_corpus(path)


def test_empty_text_rows_dropped_not_fatal(tmp_path):
    path = tmp_path / "gaps.tsv"
    path.write_text(
        "Chief Complaint\tPredict\tConsensus\n"
        "chest pain\tY\tY\n"
        "   \tN\t-\n"
        "abd pain\tU\t-\n",
        encoding="utf-8",
    )
    load = load_corpus(path)
    assert len(load) == 2
    assert load.rows_read == 3
    assert load.rows_dropped == 1
    assert load.records[1].text == "abd pain"
    assert load.records[1].id == 1


def test_determinism(sample_tsv):
    first = load_corpus(sample_tsv)
    second = load_corpus(sample_tsv)
    assert first.records == second.records
    assert first.manifest() == second.manifest()


def test_scan_placeholder_time():
    tokens = scan_placeholders("reports onset at <<TIME>>.")
    assert len(tokens) == 1
    assert tokens[0].kind == "TIME"
    assert tokens[0].surface == "<<TIME>>"


def test_scan_no_markers():
    assert scan_placeholders("no markers here") == []


def test_scan_two_in_order():
    tokens = scan_placeholders("<<DATE>> and <<HOSPITAL>>")
    assert [t.kind for t in tokens] == ["DATE", "HOSPITAL"]


def test_scan_unclosed_is_literal():
    assert scan_placeholders("stray << angle and < signs") == []


def test_scan_spans_strictly_increasing(sample_tsv):
    load = load_corpus(sample_tsv)
    for record in load:
        spans = scan_placeholders(record.text)
        for a, b in zip(spans, spans[1:]):
            assert a.end <= b.start
        for tok in spans:
            assert record.text[tok.start : tok.end] == tok.surface


def test_reserialize_preserves_text(sample_tsv, tmp_path):
    load = load_corpus(sample_tsv)
    out = tmp_path / "roundtrip.tsv"
    lines = ["Chief Complaint\tPredict\tConsensus"]
    for r in load:
        lines.append(f"{r.text}\t{r.predict.value}\t{r.consensus.value}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    again = load_corpus(out)
    assert [r.text for r in again] == [r.text for r in load]


def test_manifest_counts_placeholders(sample_tsv):
    manifest = load_corpus(sample_tsv).manifest()
    assert manifest["placeholder_counts"] == {"DATE": 1, "HOSPITAL": 1, "TIME": 1}
    assert manifest["rows_read"] == 3
