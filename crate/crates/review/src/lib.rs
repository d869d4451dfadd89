//! Backend for the human review step of the labelling loop.
//!
//! The service exposes a dataset directory over a small JSON API. Clients
//! fetch an image and its labels, edit them and write the whole label set
//! back with the revision they started from; a stale revision is refused
//! with 409 so concurrent reviewers never overwrite each other silently.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/manifest` | classes, images and per-image review status |
//! | GET | `/api/image/{id}` | image bytes |
//! | GET | `/api/labels/{id}` | `{revision, annotations}` |
//! | PUT | `/api/labels/{id}` | same body; 200 with the new revision or 409 |
//! | POST | `/api/labels/{id}/complete` | mark reviewed |
//! | GET | `/api/progress` | `{total, completed, in_progress, pending}` |

mod api;
mod store;

pub use api::{router, serve, ServeOptions};
pub use store::{
    ImageEntry, LabelSet, ManifestView, Progress, ReviewStatus, ReviewStore, StoreError, MANIFEST_FILE, PROPOSAL_DIR, SIDECAR_FILE,
};
