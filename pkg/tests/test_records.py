import pytest
from hypothesis import given
from hypothesis import strategies as st

from cachescope.errors import MalformedLine, SchemaViolation
from cachescope.records import (
    CSV_COLUMNS,
    AccessKind,
    AccessRecord,
    parse_record,
    read_trace,
    serialize_record,
    write_trace,
)

from synth import record

CSV_LINE = "1625097600,1625097660,u1,f1,/store/a,1000,1000,miss,xrd1,true"


def test_parse_csv_miss():
    rec = parse_record(CSV_LINE, "csv")
    assert rec.kind is AccessKind.MISS
    assert rec.transfer_size == 1000
    assert rec.ts_start == 1625097600
    assert rec.file_path == "/store/a"
    assert rec.success is True


def test_parse_csv_hit():
    rec = parse_record(CSV_LINE.replace(",miss,", ",hit,"), "csv")
    assert rec.kind is AccessKind.HIT


def test_parse_transfer_exceeds_file_size():
    line = "1625097600,1625097660,u1,f1,/store/a,1000,2000,miss,xrd1,true"
    with pytest.raises(SchemaViolation):
        parse_record(line, "csv")


def test_parse_errors_carry_line_numbers():
    with pytest.raises(MalformedLine, match="line 17"):
        parse_record("not,enough,fields", "csv", line_no=17)
    with pytest.raises(SchemaViolation, match="line 3"):
        parse_record(
            "1625097600,1625097500,u1,f1,/store/a,1000,1000,miss,xrd1,true", "csv", line_no=3
        )


@pytest.mark.parametrize(
    "line",
    [
        "",
        "a,b,c",
        "x,1625097660,u1,f1,/p,1000,1000,miss,xrd1,true",  # bad int
        "1625097600,1625097660,u1,f1,/p,1000,1000,evict,xrd1,true",  # bad kind
        "1625097600,1625097660,u1,f1,/p,1000,1000,miss,xrd1,yes",  # bad bool
    ],
)
def test_malformed_csv_lines(line):
    with pytest.raises(MalformedLine):
        parse_record(line, "csv")


def test_malformed_jsonl():
    with pytest.raises(MalformedLine):
        parse_record("{not json", "jsonl")
    with pytest.raises(MalformedLine):
        parse_record("[1,2]", "jsonl")


def test_miss_with_zero_transfer_rejected():
    with pytest.raises(SchemaViolation):
        record(kind=AccessKind.MISS, file_size=10, transfer=0)


def test_failed_miss_with_zero_transfer_allowed():
    rec = record(kind=AccessKind.MISS, file_size=10, transfer=0, success=False)
    assert rec.transfer_size == 0


def test_ts_end_before_start_rejected():
    with pytest.raises(SchemaViolation):
        record(dur=-5)


_no_newline = st.text(
    alphabet=st.characters(exclude_categories=("Cs",), exclude_characters="\r\n"),
    max_size=30,
)


@st.composite
def access_records(draw, text_strategy=_no_newline):
    ts_start = draw(st.integers(0, 2**33))
    ts_end = ts_start + draw(st.integers(0, 10**6))
    kind = draw(st.sampled_from(list(AccessKind)))
    success = draw(st.booleans())
    min_size = 1 if (kind is AccessKind.MISS and success) else 0
    file_size = draw(st.integers(min_size, 2**48))
    transfer = draw(st.integers(min_size, file_size)) if file_size else 0
    return AccessRecord(
        ts_start=ts_start,
        ts_end=ts_end,
        user_id=draw(text_strategy),
        file_id=draw(text_strategy),
        file_path=draw(text_strategy),
        file_size=file_size,
        transfer_size=transfer,
        kind=kind,
        node_id=draw(text_strategy),
        success=success,
    )


@given(access_records())
def test_roundtrip_csv(rec):
    assert parse_record(serialize_record(rec, "csv"), "csv") == rec


@given(access_records(st.text(st.characters(exclude_categories=("Cs",)), max_size=30)))
def test_roundtrip_jsonl(rec):
    assert parse_record(serialize_record(rec, "jsonl"), "jsonl") == rec


def test_csv_quoting_survives_commas_and_quotes():
    rec = record(path='/store/odd,"path"', user="u,1")
    assert parse_record(serialize_record(rec, "csv"), "csv") == rec


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_trace_file_roundtrip(tmp_path, fmt):
    records = [record(fid=f"f{i}", ts=1_625_097_600 + i) for i in range(20)]
    path = tmp_path / f"trace.{fmt if fmt == 'csv' else 'jsonl'}"
    write_trace(path, records, fmt)
    assert read_trace(path, fmt) == records


def test_trace_file_quoted_newline_roundtrip(tmp_path):
    # csv.reader handles quoted newlines at file level even though a
    # single parse_record line cannot contain one
    rec = record(path="/store/a\nb")
    path = tmp_path / "trace.csv"
    write_trace(path, [rec], "csv")
    assert read_trace(path) == [rec]


def test_read_trace_requires_header(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text(CSV_LINE + "\n")
    with pytest.raises(MalformedLine, match="header"):
        read_trace(path)


def test_read_trace_reports_bad_line(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text(",".join(CSV_COLUMNS) + "\n" + CSV_LINE + "\nbroken\n")
    with pytest.raises(MalformedLine, match="line 3"):
        read_trace(path)


def test_format_detected_from_suffix(tmp_path):
    records = [record()]
    p_jsonl = tmp_path / "t.jsonl"
    write_trace(p_jsonl, records)
    assert p_jsonl.read_text().startswith("{")
    assert read_trace(p_jsonl) == records
