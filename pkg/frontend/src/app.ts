import { ApiError, WorkbenchClient } from "./client.js";
import {
  ActionKind,
  ViewState,
  dismissBanner,
  initialState,
  pushBanner,
  toggleOverridePick,
} from "./state.js";
import { ViewHandlers, render } from "./view.js";
import { CreateSessionRequest, DimensionLabel, SessionView } from "./types.js";

/**
 * Controller tying the client to the rendered view.
 *
 * One user gesture maps to exactly one API call; a second gesture while one
 * is in flight is dropped locally. Failures keep the prior snapshot and
 * surface as dismissible banners.
 */
export class WorkbenchApp {
  readonly state: ViewState;
  private readonly root: HTMLElement;
  private readonly client: WorkbenchClient;
  private inflight: Promise<void> | null = null;

  constructor(root: HTMLElement, client: WorkbenchClient) {
    this.root = root;
    this.client = client;
    this.state = initialState();
  }

  async start(sessionId?: string): Promise<void> {
    if (sessionId) {
      try {
        this.state.session = await this.client.getSession(sessionId);
        await this.refreshTmIndex();
      } catch (err) {
        this.fail(err);
      }
    }
    this.render();
  }

  /** Resolves when the current in-flight action (if any) has settled. */
  idle(): Promise<void> {
    return this.inflight ?? Promise.resolve();
  }

  private render(): void {
    render(this.root, this.state, this.handlers());
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError) {
      pushBanner(this.state, err.code, err.message);
    } else {
      pushBanner(this.state, "client_error", String(err));
    }
  }

  /**
   * Run one mutating gesture. Refuses to start while another is pending so
   * a rendered screen can never fire two engine mutations at once.
   */
  private submit(kind: ActionKind, call: () => Promise<SessionView>): void {
    if (this.state.pending !== null) return;
    if (kind !== "create" && this.state.session?.status === "confirmed") return;
    this.state.pending = kind;
    this.render();
    this.inflight = (async () => {
      try {
        this.state.session = await call();
        if (kind === "create" || kind === "invoke" || kind === "confirm") {
          await this.refreshTmIndex();
        }
      } catch (err) {
        this.fail(err);
      } finally {
        this.state.pending = null;
        this.inflight = null;
        this.render();
      }
    })();
  }

  /**
   * Read-only lookup used to resolve cited TM entry ids to their content.
   * Best effort: a failed search leaves citations as bare ids.
   */
  private async refreshTmIndex(): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    try {
      const results = await this.client.searchTm(
        session.source_text,
        session.language_pair.source_lang,
        session.language_pair.target_lang,
        20,
      );
      for (const r of results) {
        this.state.tmEntries.set(r.entry.entry_id, r.entry);
      }
    } catch {
      // citation resolution is cosmetic; never block the loop on it
    }
  }

  private handlers(): ViewHandlers {
    return {
      onCreate: (req: CreateSessionRequest) => {
        this.submit("create", () => this.client.createSession(req));
      },
      onRoute: (instruction: string) => {
        const id = this.state.session?.session_id;
        if (!id) return;
        this.submit("route", () => this.client.route(id, instruction));
      },
      onToggleOverride: (label: DimensionLabel) => {
        toggleOverridePick(this.state, label);
        this.render();
      },
      onOverride: () => {
        const id = this.state.session?.session_id;
        if (!id || this.state.overridePick.length === 0) return;
        const picks = [...this.state.overridePick];
        this.submit("override", () => this.client.override(id, picks));
      },
      onInvoke: () => {
        const id = this.state.session?.session_id;
        if (!id) return;
        this.submit("invoke", () => this.client.invoke(id));
      },
      onRevise: (candidateId: string, instruction: string) => {
        const id = this.state.session?.session_id;
        if (!id) return;
        this.submit("revise", () => this.client.revise(id, candidateId, instruction));
      },
      onSynthesize: () => {
        const id = this.state.session?.session_id;
        if (!id) return;
        this.submit("synthesize", () => this.client.synthesize(id));
      },
      onConfirm: (candidateId: string) => {
        const id = this.state.session?.session_id;
        if (!id) return;
        this.submit("confirm", () => this.client.confirm(id, candidateId));
      },
      onDismiss: (code: string) => {
        dismissBanner(this.state, code);
        this.render();
      },
      onCompare: (candidateId: string) => {
        if (!this.state.diffBase || this.state.diffBase === candidateId) {
          this.state.diffBase = candidateId;
          this.state.selectedCandidate = null;
        } else {
          this.state.selectedCandidate = candidateId;
        }
        this.render();
      },
      onClearDiff: () => {
        this.state.diffBase = null;
        this.state.selectedCandidate = null;
        this.render();
      },
      onTmSearch: (query: string) => {
        const session = this.state.session;
        if (!session || !query.trim()) return;
        this.inflight = this.client
          .searchTm(
            query,
            session.language_pair.source_lang,
            session.language_pair.target_lang,
            10,
          )
          .then((results) => {
            this.state.tmResults = results;
            for (const r of results) {
              this.state.tmEntries.set(r.entry.entry_id, r.entry);
            }
          })
          .catch((err) => this.fail(err))
          .finally(() => {
            this.inflight = null;
            this.render();
          });
      },
      onRefresh: () => {
        const id = this.state.session?.session_id;
        if (!id) return;
        this.inflight = (async () => {
          try {
            this.state.session = await this.client.getSession(id);
          } catch (err) {
            this.fail(err);
          } finally {
            this.inflight = null;
            this.render();
          }
        })();
      },
    };
  }
}
