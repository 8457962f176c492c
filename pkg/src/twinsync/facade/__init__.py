"""Configuration ingestion, CLI, and the HTTP/WebSocket service."""
