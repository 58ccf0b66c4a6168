import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from maxperim.codes import (
    Code,
    Composition,
    InvalidCodeError,
    InvalidCompositionError,
    InvalidDivisorError,
    QuarterCode,
    canonicalize,
    code_to_composition,
    composition_to_code,
    count_codes,
    enumerate_codes,
    equivalent,
    expand_quarter,
    odd_divisor_code,
)
from maxperim._bracelets import (
    binary_bracelets,
    brute_force_bracelets,
    count_code_bracelets,
    count_code_bracelets_fast,
)

from reference_values import CODE_COUNTS


# ---------------------------------------------------------------- helpers

def dihedral_orbit(full):
    m = len(full)
    rev = tuple(reversed(full))
    for base in (tuple(full), rev):
        for r in range(m):
            yield base[r:] + base[:r]


def brute_canonical(full):
    def key(t):
        return tuple(0 if v == 1 else 1 for v in t)

    return min(dihedral_orbit(full), key=key)


def random_valid_code(rng, n):
    while True:
        half = tuple(rng.choice((1, -1)) for _ in range(n))
        try:
            return Code(n, half)
        except InvalidCodeError:
            continue


# ------------------------------------------------------------ construction

def test_code_construction_and_full():
    c = Code.from_string("+--+-++-")
    assert c.n == 8
    assert c.full() == c.half + tuple(-v for v in c.half)
    assert str(c) == "+--+-++-"


def test_code_rejects_long_runs():
    # half ++++ gives the full code ++++---- whose cyclic runs have length 4 > n-2
    with pytest.raises(InvalidCodeError):
        Code(4, (1, 1, 1, 1))
    with pytest.raises(InvalidCodeError):
        Code.from_string("+++++---")  # run of 5 in the full 16-cycle


def test_code_rejects_bad_entries_and_size():
    with pytest.raises(InvalidCodeError):
        Code(4, (1, -1, 0, 1))
    with pytest.raises(InvalidCodeError):
        Code(5, (1, -1, 1, -1))
    with pytest.raises(InvalidCodeError):
        Code.from_full([1, -1, 1, -1, -1, 1, -1, -1])  # not antisymmetric


def test_quarter_code_validation():
    with pytest.raises(InvalidCodeError):
        QuarterCode(6, (1, -1, 1))  # n not divisible by 4
    with pytest.raises(InvalidCodeError):
        QuarterCode(8, (1, -1))  # wrong length
    q = QuarterCode.from_string("+--+")
    assert q.n == 8


# ---------------------------------------------------------- canonicalize

def test_canonicalize_matches_brute_force_oracle():
    rng = random.Random(7)
    for _ in range(1000):
        c = random_valid_code(rng, 8)
        expect = brute_canonical(c.full())
        got = canonicalize(c)
        assert got.full() == expect


def test_canonicalize_idempotent_and_orbit_constant():
    rng = random.Random(11)
    for _ in range(200):
        c = random_valid_code(rng, 8)
        canon = canonicalize(c)
        assert canonicalize(canon) == canon
        # same canonical form for any dihedral image
        orbit = list(dihedral_orbit(c.full()))
        img = Code.from_full(orbit[rng.randrange(len(orbit))])
        assert canonicalize(img) == canon


def test_canonicalize_published_octagon_code():
    c = Code.from_string("+--+-++-")
    canon = canonicalize(c)
    assert equivalent(c, canon)
    assert canonicalize(canon) == canon


def test_alternating_code_highly_symmetric():
    c = Code(4, (1, -1, 1, -1))
    canon = canonicalize(c)
    # orbit of the alternating code is tiny: all rotations by 2 fix it
    orbit = set(dihedral_orbit(c.full()))
    assert len(orbit) <= 4 * c.n
    assert canonicalize(Code.from_full(sorted(orbit)[0])) == canon


# ----------------------------------------------------------- enumeration

@pytest.mark.parametrize("n", [4, 8, 16])
def test_enumerate_counts_match_published_table(n):
    codes = list(enumerate_codes(n))
    assert len(codes) == CODE_COUNTS[n]
    assert len({c.full() for c in codes}) == CODE_COUNTS[n]
    assert count_codes(n) == CODE_COUNTS[n]


def test_enumerated_codes_are_canonical_and_valid():
    for c in enumerate_codes(8):
        assert canonicalize(c) == c
        comp = code_to_composition(c)
        assert len(comp.parts) % 2 == 1 and len(comp.parts) >= 3


def test_enumeration_vs_brute_force_class_count():
    # zonogon view oracle: classify all antisymmetric strings under the
    # dihedral group; valid classes (run <= n-2) must match the stream
    for n in (4, 6, 8, 10, 12):
        classes = set()
        for bits in range(1 << n):
            half = tuple(1 if (bits >> i) & 1 == 0 else -1 for i in range(n))
            try:
                c = Code(n, half)
            except InvalidCodeError:
                continue
            classes.add(brute_canonical(c.full()))
        assert len(classes) == count_codes(n), f"n={n}"


def test_enumeration_partition_by_prefix():
    full = {str(c) for c in enumerate_codes(10)}
    parts = []
    for prefix in ((0, 0), (0, 1), (1, 0), (1, 1)):
        parts.append({str(c) for c in enumerate_codes(10, prefix=prefix)})
    union = set().union(*parts)
    assert union == full
    assert sum(len(p) for p in parts) == len(full)  # disjoint


def test_enumerate_codes_is_streaming():
    gen = enumerate_codes(16)
    first = next(gen)
    assert isinstance(first, Code)
    gen.close()


# ------------------------------------------------------------- bracelets

def test_bracelet_generator_against_brute_force():
    for n in range(1, 13):
        assert set(binary_bracelets(n)) == brute_force_bracelets(n), f"n={n}"


def test_bracelet_counts_pure_vs_compiled():
    for n in (8, 12, 16, 18):
        assert count_code_bracelets(n) == count_code_bracelets_fast(n)


# ---------------------------------------------------------- compositions

def test_published_composition_example():
    c = Code.from_string("+--+-++-")
    comp = code_to_composition(c)
    # canonical rotation of the published (2,1,2,1,2)
    assert comp == code_to_composition(composition_to_code(Composition((2, 1, 2, 1, 2)), 8))
    assert sorted(comp.parts) == [1, 1, 2, 2, 2]
    assert comp.parts == min(
        [comp.parts[i:] + comp.parts[:i] for i in range(5)]
        + [comp.parts[::-1][i:] + comp.parts[::-1][:i] for i in range(5)]
    )


def test_composition_reconstruction_published_example():
    code = composition_to_code(Composition((2, 1, 2, 2, 1)), 8)
    assert equivalent(code, Code.from_string("++--++-+--++--+-"[:8]))
    # the full reconstruction string is the published one
    rebuilt = composition_to_code(Composition((2, 1, 2, 2, 1)), 8)
    assert "".join("+" if v == 1 else "-" for v in rebuilt.full()) == "++--++-+--++--+-"


def test_single_minus_run_code_is_the_excluded_class():
    # a full code with one minus-run per half (++----++ cyclically) is the
    # unique over-long-run class and must be rejected
    with pytest.raises(InvalidCodeError):
        Code.from_string("++--")
    # the only valid class at n=4 is the alternating one, composition (1,1,2)
    (only,) = list(enumerate_codes(4))
    assert code_to_composition(only).parts == (1, 1, 2)


def test_minimal_odd_composition():
    code = composition_to_code(Composition((1, 1, 1)), 3)
    assert equivalent(code, Code(3, tuple((-1) ** j for j in range(1, 4))))


def test_composition_errors():
    with pytest.raises(InvalidCompositionError):
        composition_to_code(Composition((2, 1, 2)), 8)  # sums to 5, not 8
    with pytest.raises(InvalidCompositionError):
        Composition((2, 2))  # even length
    with pytest.raises(InvalidCompositionError):
        Composition((3,))  # too short


def test_round_trip_on_random_n16_codes():
    rng = random.Random(3)
    for _ in range(50):
        c = canonicalize(random_valid_code(rng, 16))
        comp = code_to_composition(c)
        back = composition_to_code(comp, 16)
        assert equivalent(back, c)
        assert code_to_composition(back) == comp


def test_compositions_cover_all_octagon_codes():
    # both enumeration paths produce the same 11 classes
    via_stream = {canonicalize(c).full() for c in enumerate_codes(8)}
    via_comp = set()
    for m in (3, 5, 7):
        for cut in itertools.combinations(range(1, 8), m - 1):
            parts = []
            prev = 0
            for x in cut:
                parts.append(x - prev)
                prev = x
            parts.append(8 - prev)
            via_comp.add(canonicalize(composition_to_code(Composition(tuple(parts)), 8)).full())
    assert via_comp == via_stream
    assert len(via_comp) == 11


# ----------------------------------------------------------- odd divisor

def test_odd_divisor_code_formula_and_antisymmetry():
    c = odd_divisor_code(12, 3)
    for j in range(1, 13):
        assert c.half[j - 1] == (-1) ** (-(-j * 3 // 12))
    full = c.full()
    for j in range(12):
        assert full[12 + j] == -full[j]


def test_odd_divisor_alternating_for_odd_n():
    c = odd_divisor_code(9, 9)
    assert c.half == tuple((-1) ** j for j in range(1, 10))


def test_odd_divisor_errors():
    with pytest.raises(InvalidDivisorError):
        odd_divisor_code(8, 2)
    with pytest.raises(InvalidDivisorError):
        odd_divisor_code(8, 3)
    with pytest.raises(InvalidDivisorError):
        odd_divisor_code(9, 1)


# -------------------------------------------------------------- quarters

def test_expand_quarter_published_examples():
    assert str(expand_quarter(QuarterCode.from_string("+--+"))) == "+--+-++-"
    assert str(expand_quarter(QuarterCode.from_string("+-"))) == "+-+-"


def test_expand_quarter_defining_symmetry():
    rng = random.Random(5)
    for _ in range(50):
        entries = tuple(rng.choice((1, -1)) for _ in range(8))
        try:
            code = expand_quarter(QuarterCode(16, entries))
        except InvalidCodeError:
            continue  # some expansions violate the run bound; fine
        for j in range(1, 17):
            assert code.half[16 - j] == -code.half[j - 1]


# ---------------------------------------------------- property-based view

@st.composite
def compositions(draw):
    m = draw(st.sampled_from([3, 5, 7]))
    parts = tuple(draw(st.integers(1, 4)) for _ in range(m))
    return Composition(parts)


@given(compositions())
@settings(max_examples=60, deadline=None)
def test_property_composition_code_round_trip(comp):
    n = comp.n
    code = composition_to_code(comp, n)
    assert canonicalize(code) == canonicalize(canonicalize(code))
    back = code_to_composition(code)
    assert sorted(back.parts) == sorted(comp.parts)
    assert equivalent(composition_to_code(back, n), code)


@given(compositions(), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_property_canonical_constant_on_orbit(comp, seed):
    code = composition_to_code(comp, comp.n)
    orbit = list(dihedral_orbit(code.full()))
    img = Code.from_full(orbit[seed % len(orbit)])
    assert canonicalize(img) == canonicalize(code)


def test_no_enumerated_code_has_long_run():
    for c in enumerate_codes(10):
        full = c.full()
        m = len(full)
        for start in range(m):
            run = 1
            while run <= m and full[(start + run) % m] == full[start]:
                run += 1
            assert run <= c.n - 2 or full[(start - 1) % m] == full[start]
