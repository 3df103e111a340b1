"""
cleangog Package

This package decides residual p-finiteness questions for graphs of free groups
whose edge maps are clean (edge groups are free factors of the vertex groups).
It includes:
- Free group words, automorphisms and basis-aligned free factors
- Oracles for the lower p-central filtration of a free group
- Graphs of groups: cleanness checks, collapse to one vertex, Britton reduction
- The separation pipeline producing verifiable p-group certificates
- Property suites (the lemma lab) and a command-line surface

Why is this important?
-----------------------------------
By centralizing all main exports in the __init__.py file, users can import what
they need with a single import statement. It also serves as a form of
documentation, showing at a glance what the main entry points of the package are.

Detailed explanation of exports:
- Basis, Word, FreeMap, Automorphism, PartialAutomorphism, BasisAlignedFactor: free group plumbing
- build_lambda_oracle, quotient_group, sigma_n, theta1: filtration oracles and induced actions
- GraphOfGroups, validate_clean, collapse, britton_reduce, parse_gog_word: graphs of groups
- separate, verify_certificate, Certificate, NonPWitness: the separation pipeline
- RunConfig, CertificateModel, GraphOfGroupsModel, CommandResponse: Pydantic schemas
- CapMonitor, ElementCapMonitor, NoCapMonitor: strategies for bounding enumerations
- ToolkitLogger: structured logging
- CleanGogError and subclasses: custom exceptions

If you add new public APIs to the package, make sure to update this file to include them in __all__.
"""

# Import free group words, maps and factors.
from .freegrp import Automorphism, Basis, BasisAlignedFactor, FreeMap, PartialAutomorphism, Word

# Import the filtration oracles and induced actions on finite quotients.
from .pfiltration import build_lambda_oracle, quotient_group, sigma_n, theta1

# Import graph-of-groups construction, validation, collapse and normal forms.
from .gog import GraphOfGroups, britton_reduce, collapse, parse_gog_word, validate_clean

# Import the separation pipeline and its certificate types.
from .separator import Certificate, NonPWitness, separate, verify_certificate

# Import the Pydantic schemas for configuration, input files and output documents.
from .schemas import CertificateModel, CommandResponse, GraphOfGroupsModel, RunConfig

# Import different strategies for bounding enumerations.
from .caps import CapMonitor, ElementCapMonitor, NoCapMonitor

# Import the structured logger.
from .logger import ToolkitLogger

# Import custom exceptions for explicit outcomes of each stage.
from .exceptions import (
    CapExceeded,
    CleanGogError,
    DepthExceeded,
    IdentityElement,
    InvalidInput,
    NotClean,
    OutsideSubgroup,
    PathDependence,
    UnalignedCollapse,
)

# Version of the package.
__version__ = "0.1.0"

# __all__ defines the public API of this module.
# By listing all main exports here, you make it clear what is intended for public use.
__all__ = [
    'Automorphism',
    'Basis',
    'BasisAlignedFactor',
    'FreeMap',
    'PartialAutomorphism',
    'Word',
    'build_lambda_oracle',
    'quotient_group',
    'sigma_n',
    'theta1',
    'GraphOfGroups',
    'britton_reduce',
    'collapse',
    'parse_gog_word',
    'validate_clean',
    'Certificate',
    'NonPWitness',
    'separate',
    'verify_certificate',
    'CertificateModel',
    'CommandResponse',
    'GraphOfGroupsModel',
    'RunConfig',
    'CapMonitor',
    'ElementCapMonitor',
    'NoCapMonitor',
    'ToolkitLogger',
    'CapExceeded',
    'CleanGogError',
    'DepthExceeded',
    'IdentityElement',
    'InvalidInput',
    'NotClean',
    'OutsideSubgroup',
    'PathDependence',
    'UnalignedCollapse',
]
