"""Abstract storage interface for experiment results.

This module defines the abstract interface that all storage backends must implement.
Follows the Repository pattern for clean architecture.
"""

from abc import ABC, abstractmethod
from pathlib import Path

import pandas as pd
from pydantic import BaseModel

from src.uncertain_clt.core.grid import FeedbackPolicy, ValueGrid


class ResultStorage(ABC):
    """Abstract interface for result storage."""

    @abstractmethod
    def __init__(self, root: str = "results") -> None:
        super().__init__()

    @abstractmethod
    def initialize(self) -> None:
        """Initialize storage (create directories, etc.).

        Raises:
            OSError: If the location cannot be created
        """
        pass

    @abstractmethod
    def save_report(self, name: str, report: BaseModel) -> Path:
        """Save a report (with its echoed configuration).

        Args:
            name: Report name, unique within the storage
            report: Any pydantic report model

        Returns:
            Location of the stored report
        """
        pass

    @abstractmethod
    def load_report(self, name: str) -> dict[str, object] | None:
        """Load a report as plain data.

        Args:
            name: Report name

        Returns:
            Report data or None if not found
        """
        pass

    @abstractmethod
    def save_table(self, name: str, table: pd.DataFrame) -> Path:
        """Save a tabular result (convergence rows, residuals, ...).

        Args:
            name: Table name
            table: Data to store

        Returns:
            Location of the stored table
        """
        pass

    @abstractmethod
    def load_table(self, name: str) -> pd.DataFrame | None:
        """Load a table.

        Args:
            name: Table name

        Returns:
            The table or None if not found
        """
        pass

    @abstractmethod
    def save_values(self, name: str, values: ValueGrid) -> Path:
        """Save value slices with their grid.

        Args:
            name: Result name
            values: Value slices

        Returns:
            Location of the stored values
        """
        pass

    @abstractmethod
    def save_policy(self, name: str, policy: FeedbackPolicy) -> Path:
        """Save a feedback policy with its grid and extreme matrices.

        Args:
            name: Result name
            policy: Policy to store

        Returns:
            Location of the stored policy
        """
        pass

    @abstractmethod
    def load_policy(self, name: str) -> FeedbackPolicy:
        """Load a feedback policy.

        Args:
            name: Result name, or a path to a stored policy

        Returns:
            The policy

        Raises:
            PolicyMismatchError: If the policy is missing or malformed
        """
        pass

    @abstractmethod
    def list_results(self) -> list[str]:
        """Names of every stored result.

        Returns:
            Sorted names
        """
        pass
