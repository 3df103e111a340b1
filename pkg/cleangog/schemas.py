"""
Schema definitions for run configuration, input files and command output.

This module defines the data structures and validation rules for:
- Run configuration (prime, caps, seed, parallelism, paths)
- Graph-of-groups input files and shipped fixtures
- Separation certificates and non-p witnesses
- Structured command responses

The schemas are implemented using Pydantic for automatic validation and serialization.
They only check shape and value ranges; algebraic conditions (bar involution,
edge maps being bases of free factors) are reported by gog.validate_clean.

Why is this important?
-----------------------------------
Certificates are meant to be checked by someone who does not trust the pipeline.
A strict, documented wire format is what makes that possible.
"""

# Import typing for type hints and Literal for strict value constraints.
from typing import Any, Dict, List, Literal, Optional
# Import BaseModel, Field and validators from Pydantic for schema definition and validation.
from pydantic import BaseModel, Field, field_validator, model_validator

# Import default cap values shared with the cap monitors.
from .caps import DEFAULT_ELEMENT_CAP, DEFAULT_MONOMIAL_CAP, DEFAULT_ORDER_CAP, ElementCapMonitor

SUPPORTED_PRIMES = (2, 3, 5)


def default_depth_cap(p: int) -> int:
    return 4 if p == 2 else 3


class RunConfig(BaseModel):
    """
    Configuration of a single toolkit run.

    Attributes:
        p (int): Prime, one of 2, 3, 5
        depth_cap (Optional[int]): Largest filtration depth tried; defaults to 4
            for p = 2 and 3 otherwise
        element_cap (int): Largest group materialized at once
        monomial_cap (int): Largest truncated series
        order_cap (int): Largest certificate group
        seed (int): Seed for every random choice
        jobs (int): Worker threads for the depth search
        input_path (Optional[str]): Graph-of-groups file
        cert_out (Optional[str]): Where to write the certificate
    """
    p: int = Field(default=2, description="Prime")
    depth_cap: Optional[int] = Field(default=None, ge=1, description="Largest filtration depth")
    element_cap: int = Field(default=DEFAULT_ELEMENT_CAP, gt=0, description="Element cap")
    monomial_cap: int = Field(default=DEFAULT_MONOMIAL_CAP, gt=0, description="Monomial cap")
    order_cap: int = Field(default=DEFAULT_ORDER_CAP, gt=0, description="Certificate order cap")
    seed: int = Field(default=0, description="Random seed")
    jobs: int = Field(default=1, ge=1, description="Depth search workers")
    input_path: Optional[str] = Field(default=None, description="Input graph of groups")
    cert_out: Optional[str] = Field(default=None, description="Certificate output path")

    @field_validator("p")
    @classmethod
    def _supported_prime(cls, value: int) -> int:
        if value not in SUPPORTED_PRIMES:
            raise ValueError(f"p must be one of {SUPPORTED_PRIMES}, got {value}")
        return value

    @model_validator(mode="after")
    def _prime_dependent_defaults(self) -> "RunConfig":
        if self.depth_cap is None:
            self.depth_cap = default_depth_cap(self.p)
        return self

    def monitor(self) -> ElementCapMonitor:
        """
        Cap monitor enforcing this configuration.
        """
        return ElementCapMonitor(
            element_cap=self.element_cap,
            monomial_cap=self.monomial_cap,
            order_cap=self.order_cap,
            depth_cap=self.depth_cap,
        )


class FreeMapModel(BaseModel):
    """
    Homomorphism given by images of the source generators as signed-letter arrays.
    """
    source_rank: int = Field(..., ge=1)
    images: List[List[int]]

    @field_validator("images")
    @classmethod
    def _nonzero_letters(cls, value: List[List[int]]) -> List[List[int]]:
        for image in value:
            if any(letter == 0 for letter in image):
                raise ValueError("letters are nonzero signed indices")
        return value

    @model_validator(mode="after")
    def _one_image_per_generator(self) -> "FreeMapModel":
        if len(self.images) != self.source_rank:
            raise ValueError(f"expected {self.source_rank} images, got {len(self.images)}")
        return self


class FactorModel(BaseModel):
    selected: List[int] = Field(..., min_length=1)


class EdgeModel(BaseModel):
    id: str = Field(..., min_length=1)
    bar: str = Field(..., min_length=1)
    tau: str = Field(..., min_length=1)


class GraphOfGroupsModel(BaseModel):
    """
    Graph of free groups as read from JSON.

    Attributes:
        vertices (List[str]): Vertex ids
        edges (List[EdgeModel]): Oriented edges with their reverse and terminal vertex
        vertex_ranks (Dict[str, int]): Rank of each vertex group
        vertex_names (Optional[Dict[str, List[str]]]): Generator labels per vertex
        edge_factors (Dict[str, FactorModel]): Factor of G_tau(e) carrying the edge group
        edge_maps (Dict[str, FreeMapModel]): For an edge e, the basis of factor(e)
            sent to words of G_tau(bar e) forming a basis of factor(bar e); one
            per edge pair is enough
    """
    vertices: List[str] = Field(..., min_length=1)
    edges: List[EdgeModel] = Field(default_factory=list)
    vertex_ranks: Dict[str, int]
    vertex_names: Optional[Dict[str, List[str]]] = None
    edge_factors: Dict[str, FactorModel] = Field(default_factory=dict)
    edge_maps: Dict[str, FreeMapModel] = Field(default_factory=dict)

    @field_validator("vertex_ranks")
    @classmethod
    def _positive_ranks(cls, value: Dict[str, int]) -> Dict[str, int]:
        for vertex, rank in value.items():
            if rank < 1:
                raise ValueError(f"vertex {vertex} needs a positive rank")
        return value


class CertificateMeta(BaseModel):
    depth: int = Field(..., ge=1)
    cover_index: int = Field(..., ge=1)
    kernel_level: int = Field(..., ge=0)
    kernel_rank: Optional[int] = None


class CertificateModel(BaseModel):
    """
    Finite p-group quotient of the finite-index subgroup, as permutations.

    Attributes:
        p (int): Prime
        degree (int): Number of permuted points
        order_exp (int): The group generated has order p^order_exp
        generator_names (List[str]): Presentation generators, in image order
        generator_images (List[List[int]]): One permutation of range(degree) per generator
        element_image (List[int]): Image of the separated element
        meta (CertificateMeta): Depth, cover index and kernel level
    """
    p: int
    degree: int = Field(..., ge=1)
    order_exp: int = Field(..., ge=0)
    generator_names: List[str] = Field(default_factory=list)
    generator_images: List[List[int]]
    element_image: List[int]
    meta: CertificateMeta


class NonPWitnessModel(BaseModel):
    """
    Homomorphism onto the theta_1 image group in which the element survives.
    """
    p: int
    order: int = Field(..., ge=1)
    state: List[List[int]] = Field(..., description="theta_1 image of the element, as a matrix")
    generator_names: List[str] = Field(default_factory=list)
    generator_images: List[List[int]] = Field(default_factory=list)
    element_image: List[int] = Field(default_factory=list)


class FixtureModel(BaseModel):
    name: str = Field(..., min_length=1)
    description: str = ""
    gog: GraphOfGroupsModel
    trivial_words: List[str] = Field(default_factory=list)
    nontrivial_words: List[str] = Field(default_factory=list)


class CommandResponse(BaseModel):
    """
    Schema for structured command results.

    Attributes:
        status (Literal['success', 'error', 'warning', 'limit', 'unsupported']):
            'limit' marks a run stopped by a cap, 'unsupported' a valid input the
            collapse cannot represent.
        message (str): Human-readable description of the result.
        data (Optional[dict[str, Any]]): Additional result data.
    """
    status: Literal['success', 'error', 'warning', 'limit', 'unsupported']
    message: str = Field(..., min_length=1, description="Human readable result message")
    data: Optional[Dict[str, Any]] = Field(default=None, description="Additional result data")
