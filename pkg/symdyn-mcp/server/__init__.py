"""Symdyn MCP Server - symbolic dynamics lab with scrambled-set constructions as MCP tools."""

__version__ = "0.1.0"
