/** Typed client for the JSON API. Every payload here is documented server-side;
 * the UI never invents routes or fields. */

export interface ApiErrorBody {
  code: string;
  message: string;
}

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

interface Envelope<T> {
  ok: boolean;
  data?: T;
  error?: ApiErrorBody;
}

export async function api<T>(path: string, init?: RequestInit): Promise<T> {
  const headers: Record<string, string> = { accept: "application/json" };
  if (init?.body) headers["content-type"] = "application/json";
  const response = await fetch(path, { ...init, headers: { ...headers, ...init?.headers } });
  let body: Envelope<T>;
  try {
    body = (await response.json()) as Envelope<T>;
  } catch {
    throw new ApiError(response.status, { code: "BadResponse", message: response.statusText });
  }
  if (!body.ok || !response.ok) {
    throw new ApiError(response.status, body.error ?? { code: "Unknown", message: response.statusText });
  }
  return body.data as T;
}

/** Stale-response guard: tag each request, accept only the newest. */
export class SequenceGuard {
  private seq = 0;

  next(): number {
    return ++this.seq;
  }

  isCurrent(token: number): boolean {
    return token === this.seq;
  }
}

// --- payload shapes ---------------------------------------------------------

export interface EntityRef {
  iri?: string;
  label: string;
}

export type FieldValueJson =
  | { type: "literal"; value: string; datatype?: string }
  | { type: "entity"; iri: string; label: string }
  | { type: "new_entity"; label: string };

export interface WidgetSpec {
  id: string;
  label: string;
  widget: "literal" | "text_long" | "entity" | "dropdown" | "checkbox" | "date" | "url";
  property_iri: string;
  required: boolean;
  cardinality: "one" | "many";
  disambiguate: boolean;
  suggest_endpoint: string | null;
  suggest_sources: string[];
  ner_endpoint: string | null;
  duplicate_endpoint: string | null;
  vocabulary_terms: { term_iri: string; label: string }[];
}

export interface FormSpec {
  template_id: string;
  widgets: WidgetSpec[];
}

export interface Suggestion {
  iri: string;
  label: string;
  description: string | null;
  source: string;
  link: string;
}

export interface SuggestResponse {
  degraded: boolean;
  suggestions: Suggestion[];
}

export interface NerCandidate {
  surface: string;
  start: number;
  end: number;
  kb_iri: string | null;
  label: string;
  confidence: number;
  providers: string[];
}

export interface NerResponse {
  degraded: boolean;
  candidates: NerCandidate[];
}

export interface DuplicateHit {
  id: string;
  template_id: string;
  label: string;
  stage: string;
}

export interface TermJson {
  key: string;
  type: "uri" | "literal" | "bnode";
  value: string;
  datatype?: string;
  "xml:lang"?: string;
}

export interface FacetBucketJson {
  value: TermJson;
  label: string;
  count: number;
}

export interface ExploreResponse {
  template_id: string;
  label: string;
  facets: { field_id: string; buckets: FacetBucketJson[] }[];
  records: RecordSummaryJson[];
}

export interface RecordSummaryJson {
  iri: string;
  label: string;
  template_id: string;
  stage: string;
  snippet: string | null;
}

export interface RecordListEntry {
  id: string;
  template_id: string;
  iri: string;
  label: string;
  stage: string;
  ever_published: boolean;
  updated_at: string;
  updated_by: string;
  changed_fields: string[];
  history: { kind: string; agent: string; at: string }[];
}

export interface RecordData {
  id: string;
  template_id: string;
  iri: string;
  stage: string;
  ever_published: boolean;
  values: Record<string, FieldValueJson[]>;
  history: { kind: string; agent: string; at: string }[];
}

export interface SessionInfo {
  authenticated: boolean;
  accredited: boolean;
  user_id?: string;
  auth_mode: string;
}

export interface TemplateInfo {
  template_id: string;
  resource_name: string;
  label: string;
}

export interface SparqlBinding {
  type: string;
  value: string;
  datatype?: string;
  "xml:lang"?: string;
}

export interface SparqlResults {
  head: { vars: string[] };
  results: { bindings: Record<string, SparqlBinding>[] };
}

/** POST /sparql speaks the protocol directly (results JSON, not the envelope). */
export async function runSparql(query: string): Promise<SparqlResults> {
  const response = await fetch("/sparql", {
    method: "POST",
    headers: {
      "content-type": "application/x-www-form-urlencoded",
      accept: "application/sparql-results+json",
    },
    body: new URLSearchParams({ query }).toString(),
  });
  const body = await response.json();
  if (!response.ok) {
    const error = (body as Envelope<never>).error ?? { code: "Unknown", message: "query failed" };
    throw new ApiError(response.status, error);
  }
  return body as SparqlResults;
}
