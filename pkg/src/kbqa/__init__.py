"""Question answering over a triple knowledge base."""
