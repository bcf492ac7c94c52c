"""
Tests for the text forms of flits and transactions.
"""

import pytest

from ucie_mem.errors import FlitParseError
from ucie_mem.flit import ReqCmd, RequestHeader, RespCmd, ResponseHeader, Transaction
from ucie_mem.flit.listing import (
    format_flits,
    format_transaction,
    format_transactions,
    parse_flits,
    parse_transaction,
    parse_transactions,
)

LINE = bytes(range(64))


class TestTransactions:
    """Test transaction lines."""

    def test_format_read(self):
        """Test the read form."""
        assert format_transaction(Transaction(RequestHeader(cmd=ReqCmd.MEM_RD, tag=1, address=0x40))) == "RD tag=1 addr=0x40"

    def test_format_response(self):
        """Test optional response fields."""
        text = format_transaction(Transaction(ResponseHeader(cmd=RespCmd.CMP, tag=2, devload=3, poison=1)))
        assert text == "CMP tag=2 devload=3 poison=1"

    def test_parse_write(self):
        """Test parsing a write with data."""
        transaction = parse_transaction(f"wr tag=0x10 addr=128 meta=2 data={LINE.hex()}")
        assert transaction.header == RequestHeader(cmd=ReqCmd.MEM_WR, tag=16, address=128, meta_data=2)
        assert transaction.data == LINE

    def test_listing_round_trip(self):
        """Test that formatting and parsing agree on a listing."""
        listing = [
            Transaction(RequestHeader(cmd=ReqCmd.MEM_WR, tag=5, address=7), LINE),
            Transaction(ResponseHeader(cmd=RespCmd.MEM_DATA, tag=5, meta_data=1), LINE),
        ]
        assert parse_transactions(format_transactions(listing)) == listing

    def test_comments_and_blanks(self):
        """Test that comment and blank lines are skipped."""
        assert len(parse_transactions("# reads\n\nRD tag=1\n  # done\n")) == 1

    @pytest.mark.parametrize(
        ("line", "match"),
        [
            ("", "empty"),
            ("FOO tag=1", "unknown transaction kind"),
            ("RD tag", "cannot parse field"),
            ("RD tag=zz", "bad field value"),
            ("WR tag=1 data=00", "64 bytes"),
        ],
    )
    def test_parse_errors(self, line, match):
        """Test malformed transaction lines."""
        with pytest.raises(FlitParseError, match=match):
            parse_transaction(line)


class TestFlits:
    """Test hex flit lines."""

    def test_round_trip(self):
        """Test that hex lines parse back into flits."""
        flits = [bytes(256), bytes(range(256))]
        text = format_flits(flits)
        assert text.count("\n") == 2
        assert parse_flits(text + "\n") == flits

    def test_bad_character_offset(self):
        """Test that the offset points at the bad character."""
        with pytest.raises(FlitParseError) as exc_info:
            parse_flits("\n" + "0" * 10 + "g")
        assert exc_info.value.offset == 11

    def test_wrong_length(self):
        """Test that short lines are reported at their start."""
        with pytest.raises(FlitParseError, match="expected 512") as exc_info:
            parse_flits("00" * 256 + "\n00\n")
        assert exc_info.value.offset == 513
