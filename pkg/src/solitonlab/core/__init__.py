"""Shared configuration, logging, telemetry and error types."""
