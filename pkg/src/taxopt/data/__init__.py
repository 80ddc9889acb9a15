"""Population ingestion, synthetic generation and report serialization."""

from .population import (
    HOUSEHOLD_INCOME,
    PERSONAL_INCOME,
    Household,
    Population,
    Taxpayer,
    dump_population_csv,
    load_population,
    load_population_csv,
    population_from_json,
    population_to_json,
    save_population,
)

__all__ = [
    "HOUSEHOLD_INCOME",
    "PERSONAL_INCOME",
    "Household",
    "Population",
    "Taxpayer",
    "dump_population_csv",
    "load_population",
    "load_population_csv",
    "population_from_json",
    "population_to_json",
    "save_population",
]
