"""Normal forms and rigidity for embeddings between BSD models."""
