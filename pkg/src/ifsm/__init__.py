"""Transfer operators, pressure and equilibrium states for iterated function
systems whose branch weights depend on the current point."""
from .chaos import CellHistogram, ImageGrid, OrbitRecord, elton_average, empirical_measure, pc_plot, sample_orbit
from .config import bundled_config, dump_config, load_config
from .errors import IFSMError
from .expr import evaluate, parse_expression, unparse
from .grid import DiscreteFunction, DiscreteMeasure, DomainBox, Grid
from .holonomy import HolonomicMeasure, disintegrate, empirical_holonomic, holonomic_lift, holonomy_residual
from .ingest import SymbolSeries, ingest_timeseries, write_pgm, write_report
from .model import AffineMap, ExprMap, ParameterSet, Potential, SystemSpec, validate_system
from .operators import TransferMatrix, apply_markov, apply_transfer, assemble_transfer, duality_residual
from .spectral import eigenmeasure, normalize_system, power_iteration, spectral_radius_gelfand
from .thermo import PressureFunctional, entropy_average, entropy_variational, equilibrium_state, pressure

__version__ = "0.1.0"
