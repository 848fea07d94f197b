"""MCP tools for the symbolic dynamics lab."""
