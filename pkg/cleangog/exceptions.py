"""
Custom exceptions for the cleangog toolkit.

This module defines the exception hierarchy shared by every stage of the toolkit:
free-group plumbing, the lower p-central filtration oracles, graphs of groups and
the separation pipeline. Each failure the pipeline can meet has its own class, so
callers (and the command line) can react to a specific outcome instead of parsing
messages.

Why is this important?
-----------------------------------
Several of these "errors" are legitimate answers rather than bugs: an element that
is the identity, a search that hit its depth cap, a cover that fails path
independence. Giving each one a class lets the CLI map them to a documented exit
code in a single place.
"""

# Import typing for the optional payloads some exceptions carry.
from typing import Any, Dict, List, Optional


# Base exception for all toolkit errors.
# Catch this to separate toolkit outcomes from unrelated Python failures.
class CleanGogError(Exception):
    """
    Base exception class for all cleangog errors.

    Every exception raised on purpose by the toolkit derives from this class.
    """
    pass


# Raised when a signed letter refers to a generator outside the basis.
class IndexOutOfRange(CleanGogError):
    """
    Exception raised when a letter index is zero or exceeds the basis rank.
    """
    pass


# Raised when two words or maps live over different bases.
class BasisMismatch(CleanGogError):
    """
    Exception raised when an operation mixes objects over different bases.

    Words are only comparable, multipliable or substitutable when they share a
    basis; mixing them silently would produce meaningless results.
    """
    pass


# Raised when the images of a map generate a proper subgroup.
class NotSurjective(CleanGogError):
    """
    Exception raised when a free-group endomorphism is not onto.

    The folded subgroup graph of the images misses at least one generator of the
    target, so no inverse exists.
    """
    pass


# Raised when a partial map pairs factors of different ranks.
class RankMismatch(CleanGogError):
    """
    Exception raised when domain and codomain factors have different ranks.
    """
    pass


# Raised when the images of a factor map do not form a basis of the codomain factor.
class NotABasisOfFactor(CleanGogError):
    """
    Exception raised when edge-map images leave the codomain factor or do not
    form one of its bases (for example x -> x^2).
    """
    pass


# Raised whenever a configured resource cap would be exceeded.
# The cap name is kept so the CLI can say which limit was hit.
class CapExceeded(CleanGogError):
    """
    Exception raised when an enumeration would exceed a configured cap.

    Exceeding a cap is always an explicit error, never a silent approximation.

    Attributes:
        cap (str): Name of the cap (element, monomial, order, depth, ...)
        limit (int): Configured limit
        requested (int): Size that was about to be materialized
    """

    def __init__(self, cap: str, limit: int, requested: int, message: Optional[str] = None):
        self.cap = cap
        self.limit = limit
        self.requested = requested
        super().__init__(message or f"{cap} cap exceeded: requested {requested}, limit {limit}")


# Raised when a graph (or graph of groups) is not connected.
class Disconnected(CleanGogError):
    """
    Exception raised when a spanning tree cannot reach every vertex.
    """
    pass


# Raised when a graph of groups fails the algebraic cleanness checks.
class NotClean(CleanGogError):
    """
    Exception raised when collapse is asked to work on an unclean graph of groups.

    Attributes:
        diagnostics (List[Dict[str, Any]]): Violations reported by validate_clean
    """

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        self.diagnostics = diagnostics or []
        super().__init__(message)


# Raised when a clean graph of groups collapses to a loop factor that is no longer basis aligned.
class UnalignedCollapse(CleanGogError):
    """
    Exception raised when collapse rewrites a loop factor of a clean graph of
    groups into a free factor that is not spanned by a subset of the new basis.

    The input is valid; the one-vertex presentation cannot represent it.

    Attributes:
        diagnostics (List[Dict[str, Any]]): The unaligned loop factors
    """

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        self.diagnostics = diagnostics or []
        super().__init__(message)


# Raised when a word does not lie in the finite-index subgroup of a cover.
class OutsideSubgroup(CleanGogError):
    """
    Exception raised when the loop path of a word does not return to the basepoint.

    Attributes:
        state (Any): Terminal state of the path, a witness that the word is outside
    """

    def __init__(self, state: Any, message: Optional[str] = None):
        self.state = state
        super().__init__(message or f"path ends at state {state!r}, not at the basepoint")


# Raised when composing induced automorphisms around a cycle is not the identity.
class PathDependence(CleanGogError):
    """
    Exception raised when the per-vertex automorphisms depend on the chosen path.

    Attributes:
        cycle (Dict[str, Any]): Offending non-tree edge (source, loop, target)
    """

    def __init__(self, cycle: Dict[str, Any], message: Optional[str] = None):
        self.cycle = cycle
        super().__init__(message or f"path dependence on non-tree edge {cycle}")


# Raised when separation is requested for an element equal to the identity.
class IdentityElement(CleanGogError):
    """
    Exception raised when the word to separate Britton-reduces to the identity.
    """
    pass


# Raised when the separating depth search runs out of depths.
class DepthExceeded(CleanGogError):
    """
    Exception raised when no depth up to the cap separates the element.

    Attributes:
        depth_cap (int): The last depth tried
    """

    def __init__(self, depth_cap: int, message: Optional[str] = None):
        self.depth_cap = depth_cap
        super().__init__(message or f"no separating depth found up to {depth_cap}")


# Raised when input files or word strings cannot be parsed or validated.
class InvalidInput(CleanGogError):
    """
    Exception raised when user input fails to parse or to match its schema.
    """
    pass
