// Wire types for /api/v1. These mirror the service's response models
// field-for-field; the dashboard never derives values the API already
// provides.

export interface DatasetSummary {
  dataset_id: string;
  platform: "twitter" | "youtube";
  version: number;
  batch_count: number;
  post_count: number;
  user_count: number;
  node_count: number;
  edge_count: number;
  community_count: number;
  has_topics: boolean;
}

export interface DatasetList {
  datasets: DatasetSummary[];
}

export interface TimeSeriesBody {
  type: "time_series";
  granularity: string;
  buckets: string[];
  counts: number[];
  by_sentiment: Record<string, number[]> | null;
}

export interface CategoricalBody {
  type: "categorical";
  field: string;
  entries: [string, number][];
}

export interface RankedListBody {
  type: "ranked_list";
  kind: string;
  entries: [string, number][];
}

export interface MatrixBody {
  type: "matrix";
  mode: "counts" | "proportions";
  row_ids: string[];
  row_names: string[];
  col_ids: string[];
  col_names: string[];
  values: number[][];
}

export interface CapabilityAbsentBody {
  type: "capability_absent";
  capability: string;
  reason: string;
}

export type AggregationBody =
  | TimeSeriesBody
  | CategoricalBody
  | RankedListBody
  | MatrixBody
  | CapabilityAbsentBody;

export interface AggregationResponse<T extends AggregationBody = AggregationBody> {
  version: number;
  result: T;
}

export interface NetworkNode {
  id: string;
  x: number;
  y: number;
  community: string | null;
  community_name: string | null;
  degree: number;
}

export interface NetworkEdge {
  source: string;
  target: string;
  weight: number;
}

export interface NetworkResponse {
  version: number;
  node_count: number;
  edge_count: number;
  edges_returned: number;
  nodes: NetworkNode[];
  edges: NetworkEdge[];
}

export interface TopicPoint {
  post_id: string;
  x: number;
  y: number;
  topic_index: number;
  topic_label: string;
}

export interface TopicMapResponse {
  version: number;
  points: TopicPoint[];
}

export interface PostRecord {
  id: string;
  author_id: string;
  text: string;
  created_at: string;
  language?: string;
  sentiment?: string;
  engagement?: number;
  urls?: string[];
  hashtags?: string[];
  [extra: string]: unknown;
}

export interface PostsResponse {
  version: number;
  total: number;
  page: number;
  page_size: number;
  posts: PostRecord[];
}

export interface RenameResponse {
  version: number;
  kind: "community" | "topic";
  label_id: string;
  name: string;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
