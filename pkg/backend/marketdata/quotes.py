"""
Option Quotes
Chain parsing, grouping and forward normalization.
"""

import io
import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

from backend.marketdata.black_scholes import no_arbitrage_band
from backend.utils.exceptions import (
    DuplicateQuote,
    InvalidInput,
    MalformedRow,
    NegativeValue,
    NoQuotes,
)

logger = structlog.get_logger()

REQUIRED_COLUMNS = ("maturity", "strike", "side")
INTRINSIC_SLACK = 1e-10
_SIDES = {"call": "call", "c": "call", "put": "put", "p": "put"}


@dataclass(frozen=True)
class OptionQuote:
    """One European quote; at least one of price and iv is set."""

    maturity: float
    strike: float
    side: Literal["call", "put"]
    price: Optional[float] = None
    iv: Optional[float] = None

    def __post_init__(self):
        if self.price is None and self.iv is None:
            raise InvalidInput("quote needs a price or an implied volatility")
        if self.maturity <= 0 or self.strike <= 0:
            raise InvalidInput(f"maturity and strike must be positive: {self}")


@dataclass(frozen=True)
class OptionChain:
    """Quotes on one underlying, sorted by (maturity, strike, side)."""

    spot: float
    rate: float
    quotes: Tuple[OptionQuote, ...]
    dropped: int = 0
    _by_maturity: Dict[float, Tuple[OptionQuote, ...]] = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if not (self.spot > 0 and math.isfinite(self.spot)):
            raise InvalidInput(f"spot must be positive, got {self.spot}")
        if not math.isfinite(self.rate):
            raise InvalidInput(f"rate must be finite, got {self.rate}")
        ordered = tuple(sorted(self.quotes, key=lambda q: (q.maturity, q.strike, q.side)))
        object.__setattr__(self, "quotes", ordered)
        groups: Dict[float, List[OptionQuote]] = {}
        for quote in ordered:
            groups.setdefault(quote.maturity, []).append(quote)
        object.__setattr__(self, "_by_maturity", {t: tuple(qs) for t, qs in groups.items()})

    @property
    def maturities(self) -> Tuple[float, ...]:
        return tuple(self._by_maturity)

    def quotes_at(self, maturity: float) -> Tuple[OptionQuote, ...]:
        return self._by_maturity.get(maturity, ())

    def forward(self, maturity: float) -> float:
        return self.spot * math.exp(self.rate * maturity)


def moneyness(strike: float, maturity: float, spot: float, rate: float) -> float:
    """Normalized moneyness km = K / F(τ)."""
    return strike / (spot * math.exp(rate * maturity))


def normalized_price(forward_premium: float, forward: float, spot: float) -> float:
    """C_N = C / F, expressed on the spot scale (C_N · S_0)."""
    return forward_premium / forward * spot


def _parse_float(raw, line: int, column: str, required: bool) -> Optional[float]:
    if raw is None or (isinstance(raw, float) and math.isnan(raw)) or str(raw).strip() == "":
        if required:
            raise MalformedRow(line, f"missing {column}")
        return None
    try:
        value = float(str(raw).strip())
    except ValueError:
        raise MalformedRow(line, f"{column} is not a number: {raw!r}")
    if not math.isfinite(value):
        raise MalformedRow(line, f"{column} is not finite: {raw!r}")
    if value < 0:
        raise NegativeValue(f"line {line}: negative {column} {value}")
    return value


def _data_line_numbers(text: str) -> List[int]:
    return [
        i + 1
        for i, line in enumerate(text.splitlines())
        if line.strip() and not line.lstrip().startswith("#")
    ]


def parse_chain(text: str, spot: float, rate: float = 0.0) -> OptionChain:
    """
    Parse a delimited chain table into an OptionChain.

    The header must name maturity, strike and side plus price and/or iv.
    Quotes priced outside the no-arbitrage band are dropped with a warning
    and counted on the chain.

    Raises:
        MalformedRow: unparsable row (1-based line number attached)
        DuplicateQuote: repeated (maturity, strike, side)
        NegativeValue: negative numeric field
        NoQuotes: nothing usable left
    """
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            comment="#",
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise NoQuotes("chain text is empty")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise MalformedRow(int(match.group(1)) if match else 0, str(e))

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing or not ({"price", "iv"} & set(frame.columns)):
        raise MalformedRow(1, f"header must name {REQUIRED_COLUMNS} and price or iv, got {list(frame.columns)}")

    line_numbers = _data_line_numbers(text)[1:]
    quotes: List[OptionQuote] = []
    seen = set()
    dropped = 0

    for position, row in enumerate(frame.itertuples(index=False)):
        line = line_numbers[position] if position < len(line_numbers) else position + 2
        record = row._asdict()

        maturity = _parse_float(record.get("maturity"), line, "maturity", required=True)
        strike = _parse_float(record.get("strike"), line, "strike", required=True)
        price = _parse_float(record.get("price"), line, "price", required=False)
        iv = _parse_float(record.get("iv"), line, "iv", required=False)
        side = _SIDES.get(str(record.get("side", "")).strip().lower())

        if side is None:
            raise MalformedRow(line, f"side must be call or put, got {record.get('side')!r}")
        if maturity == 0 or strike == 0:
            raise MalformedRow(line, "maturity and strike must be positive")
        if price is None and iv is None:
            raise MalformedRow(line, "price and iv are both empty")
        if iv == 0:
            raise MalformedRow(line, "iv must be positive")

        key = (maturity, strike, side)
        if key in seen:
            raise DuplicateQuote(f"line {line}: duplicate quote {key}")
        seen.add(key)

        if price is not None:
            lower, upper = no_arbitrage_band(spot, strike, rate, maturity, side)
            if price < lower + INTRINSIC_SLACK or price >= upper:
                dropped += 1
                logger.warning(
                    "Quote outside no-arbitrage band dropped",
                    line=line,
                    maturity=maturity,
                    strike=strike,
                    side=side,
                    price=price,
                    lower=lower,
                    upper=upper,
                )
                if iv is None:
                    continue
                price = None

        quotes.append(OptionQuote(maturity=maturity, strike=strike, side=side, price=price, iv=iv))

    if not quotes:
        raise NoQuotes("no usable quotes in chain")

    logger.info("Chain parsed", quotes=len(quotes), dropped=dropped, maturities=len({q.maturity for q in quotes}))
    return OptionChain(spot=spot, rate=rate, quotes=tuple(quotes), dropped=dropped)


def normalize_chain(chain: OptionChain) -> OptionChain:
    """
    Move the chain to zero-rate coordinates on the spot scale.

    Strikes become K·S_0/F(τ); a premium's forward value C·e^{rτ} is
    divided by F(τ) and rescaled by S_0, which leaves prices and implied
    volatilities unchanged. The forward of every maturity is then S_0.
    """
    if chain.rate == 0.0:
        return chain

    quotes = []
    for quote in chain.quotes:
        forward = chain.forward(quote.maturity)
        growth = math.exp(chain.rate * quote.maturity)
        price = None
        if quote.price is not None:
            price = normalized_price(quote.price * growth, forward, chain.spot)
        quotes.append(
            replace(
                quote,
                strike=quote.strike * chain.spot / forward,
                price=price,
            )
        )
    return OptionChain(spot=chain.spot, rate=0.0, quotes=tuple(quotes), dropped=chain.dropped)


def chain_frame(chain: OptionChain) -> pd.DataFrame:
    """Tabular view of a chain with the CSV column layout."""
    return pd.DataFrame(
        {
            "maturity": [q.maturity for q in chain.quotes],
            "strike": [q.strike for q in chain.quotes],
            "side": [q.side for q in chain.quotes],
            "price": [np.nan if q.price is None else q.price for q in chain.quotes],
            "iv": [np.nan if q.iv is None else q.iv for q in chain.quotes],
        }
    )
